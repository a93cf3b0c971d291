#pragma once

// Random reverse co-exposure (RC) sets and the sample estimator of F(A)/n.
//
// An RC-set is drawn by picking a target v uniformly and, for every item i,
// running a reverse search from v over i-colored edges, keeping each colored
// edge with its propagation probability. The members are the pairs (u, i)
// whose item reaches v from u. For any assignment A,
//
//   F(A) = n * E[ range({l(v)} ∪ {l(i) : (u, i) ∈ A ∩ R}) ],
//
// so the sample mean of that range, times n, estimates F(A) without bias.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "divexp/core.hpp"
#include "divexp/rng.hpp"

namespace divexp {

struct RcSet {
  NodeId target = 0;
  double target_leaning = 0.0;
  // Packed pairs, sorted, unique.
  std::vector<PairId> members;
};

// Reusable scratch for drawing RC-sets on one instance. Not thread-safe; use
// one generator per thread.
class RcGenerator {
 public:
  // Called once per coin flip with the colored edge being decided.
  using FlipObserver = std::function<void(EdgeId, ItemId)>;

  RcGenerator(const SocialGraph& g, const ItemCatalog& items, const PropagationModel& model);
  RcGenerator(const SocialGraph&, const ItemCatalog&, PropagationModel&&) = delete;

  // Target drawn uniformly from the seed's stream, then the reverse searches.
  RcSet generate(std::uint64_t seed);
  RcSet generate_for_target(NodeId target, std::uint64_t seed);

  void set_flip_observer(FlipObserver observer) { observer_ = std::move(observer); }

  const SocialGraph& graph() const { return g_; }
  const ItemCatalog& items() const { return items_; }
  const PropagationModel& model() const { return model_; }

 private:
  RcSet draw(NodeId target, Rng& rng);

  const SocialGraph& g_;
  const ItemCatalog& items_;
  const PropagationModel& model_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t current_ = 0;
  std::vector<NodeId> queue_;
  FlipObserver observer_;
};

RcSet generate_rc_set(const SocialGraph& g, const ItemCatalog& items,
                      const PropagationModel& model, std::uint64_t rng_seed);

// A growable collection of RC-sets with an inverted pair -> set index and
// one committed leaning span per set (the span of the items applied so far,
// starting at the target's own leaning).
class RcSample {
 public:
  static constexpr std::size_t kDefaultByteBudget = std::size_t{8} << 30;

  RcSample(std::size_t node_count, ItemCatalog items, std::uint64_t master_seed,
           std::size_t byte_budget = kDefaultByteBudget);

  std::size_t node_count() const { return node_count_; }
  std::size_t item_count() const { return items_.item_count(); }
  const ItemCatalog& items() const { return items_; }
  std::uint64_t master_seed() const { return master_seed_; }

  std::size_t size() const { return targets_.size(); }
  bool empty() const { return targets_.empty(); }
  // Sum of |R| over the sample.
  std::size_t total_members() const { return members_.size(); }
  std::size_t memory_bytes() const;
  std::size_t byte_budget() const { return byte_budget_; }

  NodeId target(std::size_t set) const { return targets_[set]; }
  double target_leaning(std::size_t set) const { return target_leanings_[set]; }
  std::span<const PairId> members(std::size_t set) const {
    return {members_.data() + offsets_[set], offsets_[set + 1] - offsets_[set]};
  }
  std::span<const std::uint32_t> sets_containing(PairId pair) const { return index_[pair]; }
  std::span<const std::uint32_t> sets_containing(SeedPair p) const {
    return index_[pack_pair(p, item_count())];
  }
  LeaningSpan span(std::size_t set) const { return spans_[set]; }

  // Appends one set; throws ResourceError above the byte budget.
  void append(RcSet set);

  // Draws sets size() .. count-1 with seeds stream_seed(master_seed, index).
  // Sets are generated `threads` at a time and appended in index order, so
  // the sample is identical for every thread count.
  void grow_to(std::size_t count, const SocialGraph& g, const PropagationModel& model,
               unsigned threads = 1);

  // Mean over sets of w(A ∩ R). Does not touch the committed spans.
  double weight(const Assignment& a) const;

  // Sum over the sets containing `p` of the span gain of l(item); commits the
  // widened spans.
  double apply_pair_total(SeedPair p);
  // Same sum without committing.
  double peek_gain_total(SeedPair p) const;
  double apply_pair(SeedPair p) { return apply_pair_total(p) / static_cast<double>(checked_size()); }
  double peek_gain(SeedPair p) const {
    return peek_gain_total(p) / static_cast<double>(checked_size());
  }

  // Restores every span to [target_leaning, target_leaning].
  void reset_spans();

  // Binary dump: "DXRC" magic, u32 version, u64 node_count, u64 item_count,
  // u64 master_seed, u64 set count, then per set: u32 target, f64 target
  // leaning, u32 member count, u32 members. Little-endian.
  void save(const std::filesystem::path& path) const;
  static RcSample load(const std::filesystem::path& path, const ItemCatalog& items,
                       std::size_t byte_budget = kDefaultByteBudget);

 private:
  std::size_t checked_size() const;

  std::size_t node_count_;
  ItemCatalog items_;
  std::uint64_t master_seed_;
  std::size_t byte_budget_;

  std::vector<NodeId> targets_;
  std::vector<double> target_leanings_;
  std::vector<std::size_t> offsets_{0};
  std::vector<PairId> members_;
  std::vector<std::vector<std::uint32_t>> index_;
  std::size_t index_capacity_ = 0;
  std::size_t index_blocks_ = 0;
  std::vector<LeaningSpan> spans_;
};

// Convenience wrapper: sample weight of `a`.
inline double sample_weight(const RcSample& s, const Assignment& a) { return s.weight(a); }

}  // namespace divexp
