#pragma once

// Ground-truth evaluation of the diversity exposure score F(A): forward
// independent-cascade simulation, Monte-Carlo averaging, and exact
// possible-world enumeration for tiny instances.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "divexp/core.hpp"

namespace divexp {

// Items each node is exposed to under one world.
class ExposureOutcome {
 public:
  explicit ExposureOutcome(std::size_t node_count) : items_(node_count) {}

  // Items are kept sorted and unique.
  void expose(NodeId v, ItemId i);
  std::span<const ItemId> items_of(NodeId v) const { return items_[v]; }
  std::size_t node_count() const { return items_.size(); }

  // f_v of node v's exposure set.
  double diversity(NodeId v, const SocialGraph& g, const ItemCatalog& items) const;
  // Sum of f_v over all nodes.
  double total_diversity(const SocialGraph& g, const ItemCatalog& items) const;

 private:
  std::vector<std::vector<ItemId>> items_;
};

// One realization of the uncertain colored edges of the multigraph. Colored
// edges with probability 0 or 1 are fixed; the remaining ones are listed in
// (edge, item) order and indexed by bit position.
class PossibleWorld {
 public:
  struct ColoredEdge {
    EdgeId edge;
    ItemId item;
    double probability;
  };

  PossibleWorld(const SocialGraph& g, const ItemCatalog& items,
                const PropagationModel& model, std::span<const ItemId> relevant_items);

  std::size_t uncertain_count() const { return uncertain_.size(); }
  std::span<const ColoredEdge> uncertain_edges() const { return uncertain_; }

  // Selects the realization whose bit j says whether uncertain edge j is live.
  void set_realization(std::uint64_t bits);
  double realization_probability() const;

  bool live(EdgeId e, ItemId item) const;

 private:
  std::size_t item_count_;
  std::vector<ColoredEdge> uncertain_;
  // Per colored edge (edge * item_count + item): 0 dead, 1 live, 2 uncertain.
  std::vector<std::uint8_t> state_;
  std::vector<std::uint32_t> uncertain_slot_;
  std::uint64_t bits_ = 0;
};

// Items reaching every node in `world` when seeding `a`.
ExposureOutcome exposure_in_world(const SocialGraph& g, const ItemCatalog& items,
                                  const PossibleWorld& world, const Assignment& a);

// One independent-cascade run, every colored edge flipped at most once.
ExposureOutcome simulate_cascade(const SocialGraph& g, const ItemCatalog& items,
                                 const PropagationModel& model, const Assignment& a,
                                 std::uint64_t rng_seed);

struct ExactOptions {
  std::size_t max_uncertain_edges = 20;
};

// Exact F(A) by enumerating every world over the uncertain colored edges of
// the items used by `a`. Throws ResourceError when more than
// `max_uncertain_edges` such edges exist.
double exact_score(const SocialGraph& g, const ItemCatalog& items,
                   const PropagationModel& model, const Assignment& a,
                   const ExactOptions& options = {});

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
  // Per-node mean of f_v; filled only when requested.
  std::vector<double> per_node;
};

struct McOptions {
  unsigned threads = 1;  // 0 = hardware concurrency
  bool per_node = false;
};

// Trial t runs in the world drawn from stream_seed(rng_seed, t), so results
// do not depend on the thread count.
McEstimate mc_score(const SocialGraph& g, const ItemCatalog& items,
                    const PropagationModel& model, const Assignment& a,
                    std::size_t trials, std::uint64_t rng_seed, const McOptions& options = {});

}  // namespace divexp
