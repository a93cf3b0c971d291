#include "divexp/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace divexp {

double checked_leaning(double value, std::string_view what) {
  if (std::isnan(value) || std::abs(value) > 1.0 + kLeaningSlack) {
    throw ValidationError(std::string(what) + ": leaning " + std::to_string(value) +
                          " outside [-1, 1]");
  }
  return std::clamp(value, -1.0, 1.0);
}

SocialGraph::SocialGraph(std::size_t node_count, std::vector<Edge> edges,
                         std::vector<double> leanings)
    : leanings_(std::move(leanings)) {
  if (leanings_.size() != node_count) {
    throw ValidationError("graph: " + std::to_string(leanings_.size()) +
                          " leanings for " + std::to_string(node_count) + " nodes");
  }
  for (std::size_t v = 0; v < node_count; ++v) {
    leanings_[v] = checked_leaning(leanings_[v], "node " + std::to_string(v));
  }
  for (const Edge& e : edges) {
    if (e.source >= node_count || e.target >= node_count) {
      throw ValidationError("graph: edge (" + std::to_string(e.source) + ", " +
                            std::to_string(e.target) + ") references a missing node");
    }
  }
  std::erase_if(edges, [](const Edge& e) { return e.source == e.target; });
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  if (edges.size() >= kNoEdge) throw ValidationError("graph: too many edges");

  out_offsets_.assign(node_count + 1, 0);
  in_offsets_.assign(node_count + 1, 0);
  sources_.reserve(edges.size());
  targets_.reserve(edges.size());
  for (const Edge& e : edges) {
    ++out_offsets_[e.source + 1];
    ++in_offsets_[e.target + 1];
    sources_.push_back(e.source);
    targets_.push_back(e.target);
  }
  for (std::size_t v = 0; v < node_count; ++v) {
    out_offsets_[v + 1] += out_offsets_[v];
    in_offsets_[v + 1] += in_offsets_[v];
  }
  in_arcs_.resize(edges.size());
  std::vector<std::size_t> cursor(in_offsets_.begin(), in_offsets_.end() - 1);
  for (EdgeId id = 0; id < edges.size(); ++id) {
    in_arcs_[cursor[edges[id].target]++] = {edges[id].source, id};
  }
}

EdgeId SocialGraph::find_edge(NodeId u, NodeId v) const {
  if (u >= node_count() || v >= node_count()) return kNoEdge;
  auto out = out_neighbors(u);
  auto it = std::lower_bound(out.begin(), out.end(), v);
  if (it == out.end() || *it != v) return kNoEdge;
  return first_out_edge(u) + static_cast<EdgeId>(it - out.begin());
}

ItemCatalog::ItemCatalog(std::vector<double> leanings) : leanings_(std::move(leanings)) {
  if (leanings_.empty()) throw ValidationError("item catalog must hold at least one item");
  for (std::size_t i = 0; i < leanings_.size(); ++i) {
    leanings_[i] = checked_leaning(leanings_[i], "item " + std::to_string(i));
  }
}

PropagationModel PropagationModel::linear(double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
  PropagationModel m;
  m.kind_ = Kind::Linear;
  m.beta_ = beta;
  return m;
}

PropagationModel PropagationModel::exponential(double beta, double gamma) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
  if (!(gamma >= 0.0) || std::isinf(gamma)) throw ConfigError("gamma must be finite and >= 0");
  PropagationModel m;
  m.kind_ = Kind::Exponential;
  m.beta_ = beta;
  m.gamma_ = gamma;
  return m;
}

PropagationModel PropagationModel::weighted_cascade() {
  PropagationModel m;
  m.kind_ = Kind::WeightedCascade;
  return m;
}

PropagationModel PropagationModel::explicit_table(
    std::size_t item_count, std::unordered_map<std::uint64_t, double> table) {
  if (item_count == 0) throw ConfigError("explicit probabilities need at least one item");
  for (const auto& [key, p] : table) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ConfigError("explicit probability " + std::to_string(p) + " outside [0, 1]");
    }
  }
  PropagationModel m;
  m.kind_ = Kind::Explicit;
  m.table_items_ = item_count;
  m.table_ = std::move(table);
  return m;
}

double PropagationModel::probability(const EdgeContext& ctx) const {
  switch (kind_) {
    case Kind::Linear:
    case Kind::Exponential: {
      const double dist = std::max(std::abs(ctx.source_leaning - ctx.item_leaning),
                                   std::abs(ctx.target_leaning - ctx.item_leaning));
      if (kind_ == Kind::Linear) return beta_ * (1.0 - dist / 2.0);
      return beta_ * std::exp(-gamma_ * dist / 2.0);
    }
    case Kind::WeightedCascade:
      if (ctx.target_in_degree == 0) {
        throw ValidationError("weighted cascade: target has no in-edges");
      }
      return 1.0 / static_cast<double>(ctx.target_in_degree);
    case Kind::Explicit: {
      if (ctx.item >= table_items_) {
        throw ConfigError("explicit probability table has no item " + std::to_string(ctx.item));
      }
      auto it = table_.find(static_cast<std::uint64_t>(ctx.edge) * table_items_ + ctx.item);
      if (it == table_.end()) {
        throw ConfigError("no explicit probability for edge " + std::to_string(ctx.edge) +
                          ", item " + std::to_string(ctx.item));
      }
      return it->second;
    }
  }
  return 0.0;
}

double PropagationModel::probability(const SocialGraph& g, const ItemCatalog& items,
                                     EdgeId e, ItemId i) const {
  const auto [u, v] = g.edge(e);
  return probability(EdgeContext{e, i, g.leaning(u), g.leaning(v), items.leaning(i),
                                 g.in_degree(v)});
}

Assignment::Assignment(std::initializer_list<SeedPair> pairs)
    : Assignment(std::span<const SeedPair>(pairs.begin(), pairs.size())) {}

Assignment::Assignment(std::span<const SeedPair> pairs) {
  for (SeedPair p : pairs) {
    if (!add(p)) {
      throw ValidationError("duplicate seed pair (" + std::to_string(p.node) + ", " +
                            std::to_string(p.item) + ")");
    }
  }
}

bool Assignment::add(SeedPair p) {
  if (!members_.insert(key(p)).second) return false;
  pairs_.push_back(p);
  ++per_node_[p.node];
  return true;
}

bool Assignment::contains(SeedPair p) const { return members_.contains(key(p)); }

std::size_t Assignment::count_for(NodeId node) const {
  auto it = per_node_.find(node);
  return it == per_node_.end() ? 0 : it->second;
}

Assignment Assignment::prefix(std::size_t n) const {
  return Assignment(std::span<const SeedPair>(pairs_).first(std::min(n, pairs_.size())));
}

void Assignment::validate(std::size_t node_count, std::size_t item_count) const {
  for (SeedPair p : pairs_) {
    if (p.node >= node_count || p.item >= item_count) {
      throw ValidationError("seed pair (" + std::to_string(p.node) + ", " +
                            std::to_string(p.item) + ") outside the instance");
    }
  }
}

ConstraintSet::ConstraintSet(std::size_t k, std::size_t default_attention,
                             std::map<NodeId, std::size_t> overrides)
    : k_(k), default_attention_(default_attention), overrides_(std::move(overrides)) {
  if (k_ < 1) throw ConfigError("k must be at least 1");
  if (default_attention_ < 1) throw ConfigError("attention bound must be at least 1");
  for (const auto& [node, bound] : overrides_) {
    if (bound < 1) {
      throw ConfigError("attention bound of node " + std::to_string(node) +
                        " must be at least 1");
    }
  }
}

std::size_t ConstraintSet::attention(NodeId v) const {
  auto it = overrides_.find(v);
  return it == overrides_.end() ? default_attention_ : it->second;
}

std::size_t ConstraintSet::total_attention(std::size_t node_count) const {
  std::size_t total = 0;
  for (NodeId v = 0; v < node_count; ++v) {
    const std::size_t b = attention(v);
    if (b >= kUnbounded - total) return kUnbounded;
    total += b;
  }
  return total;
}

FeasibilityReport check_feasible(const Assignment& a, const ConstraintSet& c) {
  FeasibilityReport report;
  report.over_budget = a.size() > c.budget();
  std::map<NodeId, std::size_t> counts;
  for (SeedPair p : a.pairs()) ++counts[p.node];
  for (const auto& [node, count] : counts) {
    if (count > c.attention(node)) report.over_attention.push_back(node);
  }
  return report;
}

double diversity_level(double node_leaning, std::span<const double> item_leanings) {
  LeaningSpan span = LeaningSpan::at(checked_leaning(node_leaning, "node"));
  for (double x : item_leanings) span = span_gain(span, checked_leaning(x, "item")).span;
  return span.width();
}

AssignmentStats assignment_stats(const Assignment& a, const SocialGraph& g,
                                 const ItemCatalog& items) {
  if (a.empty()) throw ValidationError("assignment statistics need a non-empty assignment");
  a.validate(g.node_count(), items.item_count());

  std::size_t max_degree = 0;
  for (NodeId v = 0; v < g.node_count(); ++v) max_degree = std::max(max_degree, g.out_degree(v));

  AssignmentStats s;
  std::vector<bool> seen(items.item_count(), false);
  for (SeedPair p : a.pairs()) {
    const double lu = g.leaning(p.node);
    const double li = items.leaning(p.item);
    s.immediate_diversity += std::abs(li - lu);
    s.mean_out_degree += static_cast<double>(g.out_degree(p.node));
    s.mean_sq_node_leaning += lu * lu;
    s.mean_sq_item_leaning += li * li;
    if (!seen[p.item]) {
      seen[p.item] = true;
      ++s.distinct_items;
    }
  }
  const double count = static_cast<double>(a.size());
  s.immediate_diversity /= count;
  s.mean_out_degree /= count;
  s.mean_normalized_degree =
      max_degree == 0 ? 0.0 : s.mean_out_degree / static_cast<double>(max_degree);
  s.mean_sq_node_leaning /= count;
  s.mean_sq_item_leaning /= count;
  s.distinct_item_fraction =
      static_cast<double>(s.distinct_items) / static_cast<double>(items.item_count());
  return s;
}

}  // namespace divexp
