#pragma once

// Domain model: follower graph, item catalog, propagation probabilities,
// seed assignments and the leaning-range diversity function.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "divexp/errors.hpp"

namespace divexp {

using NodeId = std::uint32_t;
using ItemId = std::uint32_t;
using EdgeId = std::uint32_t;
// Packed (node, item) pair: node * item_count + item. Orders like the
// (node, item) tuple, which is the tie-break order of every greedy here.
using PairId = std::uint32_t;

inline constexpr double kLeaningSlack = 1e-12;

// Returns `value` clipped to [-1, 1] if it lies within kLeaningSlack of the
// interval; throws ValidationError otherwise.
double checked_leaning(double value, std::string_view what);

class SocialGraph {
 public:
  // (source, target): target follows source, so items flow source -> target.
  struct Edge {
    NodeId source;
    NodeId target;
    auto operator<=>(const Edge&) const = default;
  };
  struct InArc {
    NodeId source;
    EdgeId edge;
  };

  SocialGraph() = default;
  // Self-loops and repeated edges are dropped. Edge ids follow the sorted
  // (source, target) order.
  SocialGraph(std::size_t node_count, std::vector<Edge> edges,
              std::vector<double> leanings);

  std::size_t node_count() const { return leanings_.size(); }
  std::size_t edge_count() const { return targets_.size(); }

  double leaning(NodeId v) const { return leanings_[v]; }
  std::span<const double> leanings() const { return leanings_; }

  Edge edge(EdgeId e) const { return {sources_[e], targets_[e]}; }

  // Out-edges of u occupy ids [first_out_edge(u), first_out_edge(u) + out_degree(u)).
  EdgeId first_out_edge(NodeId u) const { return static_cast<EdgeId>(out_offsets_[u]); }
  std::span<const NodeId> out_neighbors(NodeId u) const {
    return {targets_.data() + out_offsets_[u], out_offsets_[u + 1] - out_offsets_[u]};
  }
  std::span<const InArc> in_arcs(NodeId v) const {
    return {in_arcs_.data() + in_offsets_[v], in_offsets_[v + 1] - in_offsets_[v]};
  }
  std::size_t out_degree(NodeId u) const { return out_offsets_[u + 1] - out_offsets_[u]; }
  std::size_t in_degree(NodeId v) const { return in_offsets_[v + 1] - in_offsets_[v]; }

  // Returns the id of edge (u, v), or nullopt-like max value when absent.
  static constexpr EdgeId kNoEdge = std::numeric_limits<EdgeId>::max();
  EdgeId find_edge(NodeId u, NodeId v) const;

 private:
  std::vector<double> leanings_;
  std::vector<std::size_t> out_offsets_;
  std::vector<NodeId> sources_;
  std::vector<NodeId> targets_;
  std::vector<std::size_t> in_offsets_;
  std::vector<InArc> in_arcs_;
};

class ItemCatalog {
 public:
  ItemCatalog() = default;
  explicit ItemCatalog(std::vector<double> leanings);

  std::size_t item_count() const { return leanings_.size(); }
  double leaning(ItemId i) const { return leanings_[i]; }
  std::span<const double> leanings() const { return leanings_; }

 private:
  std::vector<double> leanings_;
};

// Everything edge_probability may look at for one colored edge (source,
// target)_item.
struct EdgeContext {
  EdgeId edge;
  ItemId item;
  double source_leaning;
  double target_leaning;
  double item_leaning;
  std::size_t target_in_degree;
};

class PropagationModel {
 public:
  enum class Kind { Linear, Exponential, WeightedCascade, Explicit };

  static PropagationModel linear(double beta);
  static PropagationModel exponential(double beta, double gamma);
  static PropagationModel weighted_cascade();
  // Keys are edge * item_count + item.
  static PropagationModel explicit_table(std::size_t item_count,
                                         std::unordered_map<std::uint64_t, double> table);

  Kind kind() const { return kind_; }
  double beta() const { return beta_; }
  double gamma() const { return gamma_; }

  double probability(const EdgeContext& ctx) const;
  double probability(const SocialGraph& g, const ItemCatalog& items, EdgeId e,
                     ItemId i) const;

 private:
  PropagationModel() = default;

  Kind kind_ = Kind::Linear;
  double beta_ = 0.0;
  double gamma_ = 0.0;
  std::size_t table_items_ = 0;
  std::unordered_map<std::uint64_t, double> table_;
};

inline double edge_probability(const PropagationModel& model, const EdgeContext& ctx) {
  return model.probability(ctx);
}

struct SeedPair {
  NodeId node;
  ItemId item;
  auto operator<=>(const SeedPair&) const = default;
};

inline PairId pack_pair(SeedPair p, std::size_t item_count) {
  return static_cast<PairId>(static_cast<std::uint64_t>(p.node) * item_count + p.item);
}
inline SeedPair unpack_pair(PairId id, std::size_t item_count) {
  return {static_cast<NodeId>(id / item_count), static_cast<ItemId>(id % item_count)};
}

// Seed pairs in selection order; duplicates are rejected.
class Assignment {
 public:
  Assignment() = default;
  Assignment(std::initializer_list<SeedPair> pairs);
  explicit Assignment(std::span<const SeedPair> pairs);

  // Returns false (and leaves the assignment unchanged) for a duplicate.
  bool add(SeedPair p);
  bool contains(SeedPair p) const;

  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  std::span<const SeedPair> pairs() const { return pairs_; }
  std::size_t count_for(NodeId node) const;

  // Assignment made of the first n pairs.
  Assignment prefix(std::size_t n) const;

  // Throws ValidationError if any id is outside the instance.
  void validate(std::size_t node_count, std::size_t item_count) const;

  friend bool operator==(const Assignment& a, const Assignment& b) {
    return a.pairs_ == b.pairs_;
  }

 private:
  static std::uint64_t key(SeedPair p) {
    return (static_cast<std::uint64_t>(p.node) << 32) | p.item;
  }

  std::vector<SeedPair> pairs_;
  std::unordered_set<std::uint64_t> members_;
  std::unordered_map<NodeId, std::size_t> per_node_;
};

class ConstraintSet {
 public:
  static constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

  ConstraintSet(std::size_t k, std::size_t default_attention,
                std::map<NodeId, std::size_t> overrides = {});

  std::size_t budget() const { return k_; }
  std::size_t default_attention() const { return default_attention_; }
  std::size_t attention(NodeId v) const;
  const std::map<NodeId, std::size_t>& overrides() const { return overrides_; }

  // Sum of attention bounds over `node_count` nodes, saturating.
  std::size_t total_attention(std::size_t node_count) const;

 private:
  std::size_t k_;
  std::size_t default_attention_;
  std::map<NodeId, std::size_t> overrides_;
};

struct FeasibilityReport {
  bool over_budget = false;
  std::vector<NodeId> over_attention;

  bool feasible() const { return !over_budget && over_attention.empty(); }
  explicit operator bool() const { return feasible(); }
};

FeasibilityReport check_feasible(const Assignment& a, const ConstraintSet& c);

// Closed leaning interval [lo, hi].
struct LeaningSpan {
  double lo;
  double hi;

  static LeaningSpan at(double leaning) { return {leaning, leaning}; }
  double width() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
  bool operator==(const LeaningSpan&) const = default;
};

struct SpanGain {
  double gain;
  LeaningSpan span;
};

inline SpanGain span_gain(LeaningSpan current, double leaning) {
  if (leaning > current.hi) return {leaning - current.hi, {current.lo, leaning}};
  if (leaning < current.lo) return {current.lo - leaning, {leaning, current.hi}};
  return {0.0, current};
}

// Range of {node_leaning} ∪ item_leanings; 0 when no item is given.
double diversity_level(double node_leaning, std::span<const double> item_leanings);

struct AssignmentStats {
  // Mean |l(i) - l(u)| over seed pairs.
  double immediate_diversity = 0.0;
  // Mean out-degree of seed nodes divided by the graph's max out-degree.
  double mean_normalized_degree = 0.0;
  double mean_out_degree = 0.0;
  double mean_sq_node_leaning = 0.0;
  double mean_sq_item_leaning = 0.0;
  std::size_t distinct_items = 0;
  double distinct_item_fraction = 0.0;
};

AssignmentStats assignment_stats(const Assignment& a, const SocialGraph& g,
                                 const ItemCatalog& items);

}  // namespace divexp
