#include "divexp/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace divexp {
namespace {

std::vector<NodeId> nodes_by_degree(const SocialGraph& g) {
  std::vector<NodeId> order(g.node_count());
  std::iota(order.begin(), order.end(), NodeId{0});
  std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    return g.out_degree(a) > g.out_degree(b);
  });
  return order;
}

// Per-node pass shared by Close and Far: nodes in degree order, each taking
// up to its attention bound of items in the given preference order.
template <typename Prefer>
BaselineResult degree_first(const SocialGraph& g, const ItemCatalog& items,
                            const ConstraintSet& c, Prefer prefer) {
  BaselineResult result;
  std::vector<ItemId> ranked(items.item_count());
  for (NodeId u : nodes_by_degree(g)) {
    if (result.assignment.size() >= c.budget()) break;
    std::iota(ranked.begin(), ranked.end(), ItemId{0});
    const double lu = g.leaning(u);
    std::stable_sort(ranked.begin(), ranked.end(), [&](ItemId a, ItemId b) {
      return prefer(std::abs(items.leaning(a) - lu), std::abs(items.leaning(b) - lu));
    });
    const std::size_t take = std::min(c.attention(u), ranked.size());
    for (std::size_t j = 0; j < take && result.assignment.size() < c.budget(); ++j) {
      result.assignment.add({u, ranked[j]});
    }
  }
  result.exhausted = result.assignment.size() < c.budget();
  return result;
}

}  // namespace

BaselineResult baseline_close(const SocialGraph& g, const ItemCatalog& items,
                              const ConstraintSet& c) {
  return degree_first(g, items, c, [](double a, double b) { return a < b; });
}

BaselineResult baseline_far(const SocialGraph& g, const ItemCatalog& items,
                            const ConstraintSet& c) {
  return degree_first(g, items, c, [](double a, double b) { return a > b; });
}

BaselineResult baseline_weight(const SocialGraph& g, const ItemCatalog& items,
                               const ConstraintSet& c) {
  const std::size_t h = items.item_count();
  struct Scored {
    double score;
    PairId pair;
  };
  std::vector<Scored> ranked;
  ranked.reserve(g.node_count() * h);
  for (NodeId u = 0; u < g.node_count(); ++u) {
    const double degree = static_cast<double>(g.out_degree(u));
    for (ItemId i = 0; i < h; ++i) {
      ranked.push_back(
          {degree * std::abs(g.leaning(u) - items.leaning(i)), pack_pair({u, i}, h)});
    }
  }
  std::sort(ranked.begin(), ranked.end(), [](const Scored& a, const Scored& b) {
    return a.score != b.score ? a.score > b.score : a.pair < b.pair;
  });
  BaselineResult result;
  std::vector<std::size_t> used(g.node_count(), 0);
  for (const Scored& s : ranked) {
    if (result.assignment.size() >= c.budget()) break;
    const SeedPair p = unpack_pair(s.pair, h);
    if (used[p.node] >= c.attention(p.node)) continue;
    result.assignment.add(p);
    ++used[p.node];
  }
  result.exhausted = result.assignment.size() < c.budget();
  return result;
}

}  // namespace divexp
