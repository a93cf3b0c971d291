#include "divexp/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <string>

#include "divexp/rng.hpp"
#include "parallel.hpp"

namespace divexp {
namespace {

struct ItemSeeds {
  ItemId item;
  std::vector<NodeId> nodes;
};

std::vector<ItemSeeds> group_by_item(const Assignment& a) {
  std::map<ItemId, std::vector<NodeId>> grouped;
  for (SeedPair p : a.pairs()) grouped[p.item].push_back(p.node);
  std::vector<ItemSeeds> out;
  out.reserve(grouped.size());
  for (auto& [item, nodes] : grouped) out.push_back({item, std::move(nodes)});
  return out;
}

// Breadth-first propagation of one item from its seeds. `live(edge)` decides
// each colored edge the first time the search reaches its source with the
// target still unreached, so every colored edge is examined at most once.
class ForwardSearch {
 public:
  explicit ForwardSearch(std::size_t node_count) : stamp_(node_count, 0) {}

  template <typename Live, typename Visit>
  void run(const SocialGraph& g, std::span<const NodeId> seeds, Live&& live, Visit&& visit) {
    next_stamp();
    queue_.clear();
    for (NodeId s : seeds) {
      if (stamp_[s] == current_) continue;
      stamp_[s] = current_;
      queue_.push_back(s);
      visit(s);
    }
    for (std::size_t head = 0; head < queue_.size(); ++head) {
      const NodeId u = queue_[head];
      const EdgeId first = g.first_out_edge(u);
      auto out = g.out_neighbors(u);
      for (std::size_t k = 0; k < out.size(); ++k) {
        const NodeId w = out[k];
        if (stamp_[w] == current_) continue;
        if (!live(static_cast<EdgeId>(first + k))) continue;
        stamp_[w] = current_;
        queue_.push_back(w);
        visit(w);
      }
    }
  }

 private:
  void next_stamp() {
    if (++current_ == std::numeric_limits<std::uint32_t>::max()) {
      std::fill(stamp_.begin(), stamp_.end(), 0);
      current_ = 1;
    }
  }

  std::vector<std::uint32_t> stamp_;
  std::uint32_t current_ = 0;
  std::vector<NodeId> queue_;
};

auto coin_flipper(const SocialGraph& g, const ItemCatalog& items,
                  const PropagationModel& model, ItemId item, Rng& rng) {
  return [&g, &items, &model, item, &rng](EdgeId e) {
    return rng.bernoulli(model.probability(g, items, e, item));
  };
}

// Per-trial span accumulation used by the Monte-Carlo estimator.
class TrialRunner {
 public:
  TrialRunner(const SocialGraph& g, const ItemCatalog& items, const PropagationModel& model,
              const std::vector<ItemSeeds>& seeds)
      : g_(g), items_(items), model_(model), seeds_(seeds), search_(g.node_count()),
        span_(g.node_count(), LeaningSpan{0.0, 0.0}), touched_mark_(g.node_count(), 0) {}

  // Returns sum of f_v for trial seed `seed`; adds each f_v into per_node if given.
  double run(std::uint64_t seed, double* per_node) {
    Rng rng(seed);
    ++trial_;
    touched_.clear();
    for (const ItemSeeds& s : seeds_) {
      const double li = items_.leaning(s.item);
      search_.run(g_, s.nodes, coin_flipper(g_, items_, model_, s.item, rng), [&](NodeId v) {
        if (touched_mark_[v] != trial_) {
          touched_mark_[v] = trial_;
          touched_.push_back(v);
          span_[v] = LeaningSpan::at(g_.leaning(v));
        }
        span_[v] = span_gain(span_[v], li).span;
      });
    }
    double total = 0.0;
    for (NodeId v : touched_) {
      const double w = span_[v].width();
      total += w;
      if (per_node != nullptr) per_node[v] += w;
    }
    return total;
  }

 private:
  const SocialGraph& g_;
  const ItemCatalog& items_;
  const PropagationModel& model_;
  const std::vector<ItemSeeds>& seeds_;
  ForwardSearch search_;
  std::vector<LeaningSpan> span_;
  std::vector<std::uint64_t> touched_mark_;
  std::vector<NodeId> touched_;
  std::uint64_t trial_ = 0;
};

constexpr std::size_t kTrialBlock = 256;

}  // namespace

void ExposureOutcome::expose(NodeId v, ItemId i) {
  auto& list = items_[v];
  auto it = std::lower_bound(list.begin(), list.end(), i);
  if (it == list.end() || *it != i) list.insert(it, i);
}

double ExposureOutcome::diversity(NodeId v, const SocialGraph& g,
                                  const ItemCatalog& items) const {
  LeaningSpan span = LeaningSpan::at(g.leaning(v));
  for (ItemId i : items_[v]) span = span_gain(span, items.leaning(i)).span;
  return span.width();
}

double ExposureOutcome::total_diversity(const SocialGraph& g, const ItemCatalog& items) const {
  double total = 0.0;
  for (NodeId v = 0; v < items_.size(); ++v) total += diversity(v, g, items);
  return total;
}

PossibleWorld::PossibleWorld(const SocialGraph& g, const ItemCatalog& items,
                             const PropagationModel& model,
                             std::span<const ItemId> relevant_items)
    : item_count_(items.item_count()),
      state_(g.edge_count() * items.item_count(), 0),
      uncertain_slot_(g.edge_count() * items.item_count(), 0) {
  std::vector<bool> relevant(item_count_, false);
  for (ItemId i : relevant_items) relevant.at(i) = true;
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    for (ItemId i = 0; i < item_count_; ++i) {
      if (!relevant[i]) continue;
      const double p = model.probability(g, items, e, i);
      const std::size_t slot = static_cast<std::size_t>(e) * item_count_ + i;
      if (p >= 1.0) {
        state_[slot] = 1;
      } else if (p > 0.0) {
        state_[slot] = 2;
        uncertain_slot_[slot] = static_cast<std::uint32_t>(uncertain_.size());
        uncertain_.push_back({e, i, p});
      }
    }
  }
}

void PossibleWorld::set_realization(std::uint64_t bits) { bits_ = bits; }

double PossibleWorld::realization_probability() const {
  double pr = 1.0;
  for (std::size_t j = 0; j < uncertain_.size(); ++j) {
    const double p = uncertain_[j].probability;
    pr *= ((bits_ >> j) & 1U) ? p : 1.0 - p;
  }
  return pr;
}

bool PossibleWorld::live(EdgeId e, ItemId item) const {
  const std::size_t slot = static_cast<std::size_t>(e) * item_count_ + item;
  switch (state_[slot]) {
    case 0: return false;
    case 1: return true;
    default: return ((bits_ >> uncertain_slot_[slot]) & 1U) != 0;
  }
}

ExposureOutcome exposure_in_world(const SocialGraph& g, const ItemCatalog& items,
                                  const PossibleWorld& world, const Assignment& a) {
  a.validate(g.node_count(), items.item_count());
  ExposureOutcome out(g.node_count());
  ForwardSearch search(g.node_count());
  for (const ItemSeeds& s : group_by_item(a)) {
    search.run(g, s.nodes, [&](EdgeId e) { return world.live(e, s.item); },
               [&](NodeId v) { out.expose(v, s.item); });
  }
  return out;
}

ExposureOutcome simulate_cascade(const SocialGraph& g, const ItemCatalog& items,
                                 const PropagationModel& model, const Assignment& a,
                                 std::uint64_t rng_seed) {
  a.validate(g.node_count(), items.item_count());
  ExposureOutcome out(g.node_count());
  ForwardSearch search(g.node_count());
  Rng rng(rng_seed);
  for (const ItemSeeds& s : group_by_item(a)) {
    search.run(g, s.nodes, coin_flipper(g, items, model, s.item, rng),
               [&](NodeId v) { out.expose(v, s.item); });
  }
  return out;
}

double exact_score(const SocialGraph& g, const ItemCatalog& items,
                   const PropagationModel& model, const Assignment& a,
                   const ExactOptions& options) {
  a.validate(g.node_count(), items.item_count());
  if (a.empty()) return 0.0;
  std::vector<ItemId> used;
  for (SeedPair p : a.pairs()) used.push_back(p.item);
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());

  PossibleWorld world(g, items, model, used);
  const std::size_t limit = std::min<std::size_t>(options.max_uncertain_edges, 62);
  if (world.uncertain_count() > limit) {
    throw ResourceError("instance too large for exact oracle: " +
                        std::to_string(world.uncertain_count()) +
                        " uncertain colored edges (limit " + std::to_string(limit) + ")");
  }
  const auto seeds = group_by_item(a);
  ForwardSearch search(g.node_count());
  std::vector<LeaningSpan> span(g.node_count());
  double expectation = 0.0;
  const std::uint64_t worlds = std::uint64_t{1} << world.uncertain_count();
  for (std::uint64_t bits = 0; bits < worlds; ++bits) {
    world.set_realization(bits);
    for (NodeId v = 0; v < g.node_count(); ++v) span[v] = LeaningSpan::at(g.leaning(v));
    for (const ItemSeeds& s : seeds) {
      const double li = items.leaning(s.item);
      search.run(g, s.nodes, [&](EdgeId e) { return world.live(e, s.item); },
                 [&](NodeId v) { span[v] = span_gain(span[v], li).span; });
    }
    double total = 0.0;
    for (const LeaningSpan& s : span) total += s.width();
    expectation += world.realization_probability() * total;
  }
  return expectation;
}

McEstimate mc_score(const SocialGraph& g, const ItemCatalog& items,
                    const PropagationModel& model, const Assignment& a, std::size_t trials,
                    std::uint64_t rng_seed, const McOptions& options) {
  if (trials == 0) throw ValidationError("mc_score needs at least one trial");
  a.validate(g.node_count(), items.item_count());
  const auto seeds = group_by_item(a);
  const std::size_t n = g.node_count();

  McEstimate est;
  est.trials = trials;
  if (options.per_node) est.per_node.assign(n, 0.0);
  if (seeds.empty()) return est;

  std::vector<double> totals(trials, 0.0);
  const std::size_t blocks = (trials + kTrialBlock - 1) / kTrialBlock;
  const unsigned workers = detail::resolve_threads(options.threads);
  // Blocks run `workers` at a time; their per-node sums merge in block order
  // so the floating-point result is independent of the worker count.
  const std::size_t wave = std::max<std::size_t>(1, workers);
  std::vector<std::vector<double>> block_nodes(options.per_node ? wave : 0,
                                               std::vector<double>(n, 0.0));
  std::vector<std::unique_ptr<TrialRunner>> runners(wave);
  for (std::size_t first = 0; first < blocks; first += wave) {
    const std::size_t count = std::min(wave, blocks - first);
    detail::parallel_for(count, workers, [&](std::size_t slot, unsigned) {
      if (!runners[slot]) runners[slot] = std::make_unique<TrialRunner>(g, items, model, seeds);
      double* per_node = nullptr;
      if (options.per_node) {
        std::fill(block_nodes[slot].begin(), block_nodes[slot].end(), 0.0);
        per_node = block_nodes[slot].data();
      }
      const std::size_t block = first + slot;
      const std::size_t end = std::min(trials, (block + 1) * kTrialBlock);
      for (std::size_t t = block * kTrialBlock; t < end; ++t) {
        totals[t] = runners[slot]->run(stream_seed(rng_seed, t), per_node);
      }
    });
    if (options.per_node) {
      for (std::size_t slot = 0; slot < count; ++slot) {
        for (std::size_t v = 0; v < n; ++v) est.per_node[v] += block_nodes[slot][v];
      }
    }
  }

  double sum = 0.0;
  for (double t : totals) sum += t;
  est.mean = sum / static_cast<double>(trials);
  if (trials > 1) {
    double sq = 0.0;
    for (double t : totals) sq += (t - est.mean) * (t - est.mean);
    est.std_error = std::sqrt(sq / static_cast<double>(trials - 1) / static_cast<double>(trials));
  }
  for (double& v : est.per_node) v /= static_cast<double>(trials);
  return est;
}

}  // namespace divexp
