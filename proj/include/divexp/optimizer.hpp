#pragma once

// Seed-pair selection: plain greedy over a set-function oracle, greedy over
// an RC sample, the adaptive sample-size search and the two-phase driver.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "divexp/core.hpp"
#include "divexp/rc_sampler.hpp"

namespace divexp {

// ln C(a, b) via lgamma. Throws ValidationError if b > a.
double log_binom(std::uint64_t a, std::uint64_t b);

// Final sample-size numerator:
//   4n(2ε + 12) (ln C(nh, k) + ℓ ln n + ln 2) / (3ε²).
// k is capped at nh, the size of the ground set.
double lambda_bound(std::size_t n, std::size_t h, std::size_t k, double epsilon,
                    double ell_conf);

// Sample size tried against the guess x of OPT during the lower-bound search:
//   (4ε/3 + 4) (ln C(nh, k) + ℓ ln n + ln log2(2n)) / ε² · n / x.
double theta_i(std::size_t n, std::size_t h, std::size_t k, double epsilon, double ell_conf,
               double x);

struct GreedyTrace {
  std::vector<SeedPair> selected;
  // Estimated marginal gain of each selected pair, in score units.
  std::vector<double> gains;
  double estimated_score = 0.0;
  std::size_t sample_size = 0;
  std::size_t total_members = 0;
  double lower_bound = 0.0;
  double lambda = 0.0;
  std::size_t sampling_iterations = 0;
  // The lower-bound search never met its stopping condition.
  bool lower_bound_fallback = false;
  // Fewer than k pairs could be placed under the attention bounds.
  bool constraint_exhausted = false;
};

struct GreedyResult {
  Assignment assignment;
  GreedyTrace trace;
};

using SetFunction = std::function<double(const Assignment&)>;

// Adds the feasible pair of largest marginal oracle gain until k pairs are
// chosen or nothing feasible is left. Ties go to the smallest (node, item).
GreedyResult exact_greedy(const SetFunction& oracle, const ConstraintSet& c,
                          std::size_t node_count, std::size_t item_count);

enum class GreedyEngine {
  Lazy,   // CELF priority queue with stale upper bounds
  Naive,  // full rescan of every pair at every step
};

// Greedy on the sample weight. Spans are reset on entry and left at the
// committed state of the returned assignment. Once every remaining feasible
// pair has zero gain, zero-gain pairs are added in (node, item) order until k.
GreedyResult rc_greedy(RcSample& sample, const ConstraintSet& c,
                       GreedyEngine engine = GreedyEngine::Lazy);

struct TdemParams {
  ConstraintSet constraints{1, 1};
  double epsilon = 0.2;
  double ell_conf = 1.0;
  std::uint64_t master_seed = 1;
  unsigned threads = 1;  // 0 = hardware concurrency
  std::size_t byte_budget = RcSample::kDefaultByteBudget;
  GreedyEngine engine = GreedyEngine::Lazy;

  void validate() const;
};

struct SamplingResult {
  RcSample sample;
  double lower_bound = 0.0;
  double lambda = 0.0;
  std::size_t iterations = 0;
  bool fallback = false;
  // ⌈θ_i⌉ of each executed iteration.
  std::vector<std::size_t> theta_per_iteration;
};

// Max over (u, i) of |l(u) - l(i)|: the score of the best single seed on its
// own node, a lower bound on OPT for every k >= 1.
double naive_lower_bound(const SocialGraph& g, const ItemCatalog& items);

// Adaptive sample-size search. Throws AssumptionError when all leanings
// coincide.
SamplingResult sampling_phase(const SocialGraph& g, const ItemCatalog& items,
                              const PropagationModel& model, const TdemParams& params);

// Two-phase diversity exposure maximization: sampling_phase, then rc_greedy on
// the final sample.
GreedyResult tdem(const SocialGraph& g, const ItemCatalog& items,
                  const PropagationModel& model, const TdemParams& params);

}  // namespace divexp
