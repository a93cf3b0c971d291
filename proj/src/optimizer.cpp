#include "divexp/optimizer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

namespace divexp {

double log_binom(std::uint64_t a, std::uint64_t b) {
  if (b > a) {
    throw ValidationError("log_binom: b = " + std::to_string(b) + " exceeds a = " +
                          std::to_string(a));
  }
  const std::uint64_t r = std::min(b, a - b);
  if (r == 0) return 0.0;
  if (r <= 4096) {
    // Direct sum of ln((a - r + j) / j) avoids cancellation between large
    // lgamma values.
    double sum = 0.0;
    const double base = static_cast<double>(a - r);
    for (std::uint64_t j = 1; j <= r; ++j) {
      sum += std::log1p(base / static_cast<double>(j));
    }
    return sum;
  }
  const auto ad = static_cast<double>(a);
  const auto rd = static_cast<double>(r);
  return std::lgamma(ad + 1.0) - std::lgamma(rd + 1.0) - std::lgamma(ad - rd + 1.0);
}

namespace {

double log_binom_ground(std::size_t n, std::size_t h, std::size_t k) {
  const std::uint64_t pairs = static_cast<std::uint64_t>(n) * h;
  return log_binom(pairs, std::min<std::uint64_t>(k, pairs));
}

}  // namespace

double lambda_bound(std::size_t n, std::size_t h, std::size_t k, double epsilon,
                    double ell_conf) {
  const double nd = static_cast<double>(n);
  return 4.0 * nd * (2.0 * epsilon + 12.0) *
         (log_binom_ground(n, h, k) + ell_conf * std::log(nd) + std::log(2.0)) /
         (3.0 * epsilon * epsilon);
}

double theta_i(std::size_t n, std::size_t h, std::size_t k, double epsilon, double ell_conf,
               double x) {
  if (!(x > 0.0)) throw ValidationError("theta_i needs x > 0");
  const double nd = static_cast<double>(n);
  return (4.0 * epsilon / 3.0 + 4.0) *
         (log_binom_ground(n, h, k) + ell_conf * std::log(nd) + std::log(std::log2(2.0 * nd))) /
         (epsilon * epsilon) * nd / x;
}

GreedyResult exact_greedy(const SetFunction& oracle, const ConstraintSet& c,
                          std::size_t node_count, std::size_t item_count) {
  GreedyResult result;
  double current = oracle(result.assignment);
  while (result.assignment.size() < c.budget()) {
    bool found = false;
    SeedPair best{};
    double best_value = 0.0;
    double best_gain = -std::numeric_limits<double>::infinity();
    for (NodeId u = 0; u < node_count; ++u) {
      if (result.assignment.count_for(u) >= c.attention(u)) continue;
      for (ItemId i = 0; i < item_count; ++i) {
        const SeedPair p{u, i};
        if (result.assignment.contains(p)) continue;
        Assignment trial = result.assignment;
        trial.add(p);
        const double value = oracle(trial);
        if (value - current > best_gain) {
          best_gain = value - current;
          best_value = value;
          best = p;
          found = true;
        }
      }
    }
    if (!found) {
      result.trace.constraint_exhausted = true;
      break;
    }
    result.assignment.add(best);
    result.trace.selected.push_back(best);
    result.trace.gains.push_back(best_gain);
    current = best_value;
  }
  result.trace.estimated_score = current;
  return result;
}

namespace {

class GreedyState {
 public:
  GreedyState(RcSample& sample, const ConstraintSet& c)
      : sample_(sample), c_(c), used_(sample.node_count(), 0) {}

  bool feasible(SeedPair p) const { return used_[p.node] < c_.attention(p.node); }

  void commit(SeedPair p, GreedyResult& result) {
    const double applied = sample_.apply_pair_total(p);
    result.assignment.add(p);
    result.trace.selected.push_back(p);
    result.trace.gains.push_back(applied * scale());
    sum_ += applied;
    ++used_[p.node];
  }

  // Appends zero-gain feasible pairs in (node, item) order up to k.
  void fill(GreedyResult& result) {
    const std::size_t h = sample_.item_count();
    for (NodeId u = 0; u < sample_.node_count() && result.assignment.size() < c_.budget();
         ++u) {
      for (ItemId i = 0; i < h && result.assignment.size() < c_.budget(); ++i) {
        const SeedPair p{u, i};
        if (!feasible(p) || result.assignment.contains(p)) continue;
        commit(p, result);
      }
    }
  }

  void finish(GreedyResult& result) const {
    result.trace.constraint_exhausted = result.assignment.size() < c_.budget();
    result.trace.estimated_score = sum_ * scale();
    result.trace.sample_size = sample_.size();
    result.trace.total_members = sample_.total_members();
  }

 private:
  double scale() const {
    return static_cast<double>(sample_.node_count()) / static_cast<double>(sample_.size());
  }

  RcSample& sample_;
  const ConstraintSet& c_;
  std::vector<std::size_t> used_;
  double sum_ = 0.0;
};

void naive_greedy(RcSample& sample, const ConstraintSet& c, GreedyState& state,
                  GreedyResult& result) {
  const std::size_t h = sample.item_count();
  while (result.assignment.size() < c.budget()) {
    bool found = false;
    SeedPair best{};
    double best_total = -1.0;
    for (NodeId u = 0; u < sample.node_count(); ++u) {
      for (ItemId i = 0; i < h; ++i) {
        const SeedPair p{u, i};
        if (!state.feasible(p) || result.assignment.contains(p)) continue;
        const double total = sample.peek_gain_total(p);
        if (total > best_total) {
          best_total = total;
          best = p;
          found = true;
        }
      }
    }
    if (!found) return;
    state.commit(best, result);
  }
}

struct Candidate {
  double total;
  PairId pair;
  std::size_t round;
};

// Max-heap on gain; among equal gains the smaller pair id comes first.
struct CandidateOrder {
  bool operator()(const Candidate& a, const Candidate& b) const {
    if (a.total != b.total) return a.total < b.total;
    return a.pair > b.pair;
  }
};

void lazy_greedy(RcSample& sample, const ConstraintSet& c, GreedyState& state,
                 GreedyResult& result) {
  const std::size_t h = sample.item_count();
  const std::size_t pairs = sample.node_count() * h;
  std::vector<Candidate> initial;
  for (PairId id = 0; id < pairs; ++id) {
    // Pairs outside every RC-set have zero gain on this sample for good.
    if (sample.sets_containing(id).empty()) continue;
    initial.push_back({sample.peek_gain_total(unpack_pair(id, h)), id, 0});
  }
  std::priority_queue<Candidate, std::vector<Candidate>, CandidateOrder> heap(
      CandidateOrder{}, std::move(initial));

  while (result.assignment.size() < c.budget() && !heap.empty()) {
    Candidate top = heap.top();
    const SeedPair p = unpack_pair(top.pair, h);
    if (!state.feasible(p)) {
      heap.pop();
      continue;
    }
    if (top.round != result.assignment.size()) {
      heap.pop();
      top.total = sample.peek_gain_total(p);
      top.round = result.assignment.size();
      heap.push(top);
      continue;
    }
    // A fresh zero at the top means every feasible gain is zero; the fill
    // pass then picks pairs in (node, item) order like the full rescan does.
    if (top.total <= 0.0) break;
    heap.pop();
    state.commit(p, result);
  }
}

}  // namespace

GreedyResult rc_greedy(RcSample& sample, const ConstraintSet& c, GreedyEngine engine) {
  if (sample.empty()) throw ValidationError("rc_greedy needs a non-empty RC sample");
  sample.reset_spans();
  GreedyResult result;
  GreedyState state(sample, c);
  if (engine == GreedyEngine::Lazy) {
    lazy_greedy(sample, c, state, result);
  } else {
    naive_greedy(sample, c, state, result);
  }
  state.fill(result);
  state.finish(result);
  return result;
}

void TdemParams::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
  if (!(ell_conf >= 1.0)) throw ConfigError("ell_conf must be at least 1");
}

double naive_lower_bound(const SocialGraph& g, const ItemCatalog& items) {
  if (g.node_count() == 0) return 0.0;
  const auto [lo_node, hi_node] = std::minmax_element(g.leanings().begin(), g.leanings().end());
  const auto [lo_item, hi_item] =
      std::minmax_element(items.leanings().begin(), items.leanings().end());
  return std::max(*hi_item - *lo_node, *hi_node - *lo_item);
}

SamplingResult sampling_phase(const SocialGraph& g, const ItemCatalog& items,
                              const PropagationModel& model, const TdemParams& params) {
  params.validate();
  const double lb0 = naive_lower_bound(g, items);
  if (!(lb0 > 0.0)) {
    throw AssumptionError(
        "all node and item leanings are identical; every assignment scores zero");
  }
  const std::size_t n = g.node_count();
  const std::size_t h = items.item_count();
  const std::size_t k = params.constraints.budget();
  const double eps = params.epsilon;

  SamplingResult out{RcSample(n, items, params.master_seed, params.byte_budget), 0.0, 0.0, 0, false, {}};
  out.lambda = lambda_bound(n, h, k, eps, params.ell_conf);
  out.lower_bound = lb0;
  out.fallback = true;

  const int rounds = std::bit_width(n);  // floor(log2 n) + 1
  for (int i = 1; i <= rounds; ++i) {
    const double x = std::ldexp(2.0 * static_cast<double>(n), -i);
    const auto theta =
        static_cast<std::size_t>(std::ceil(theta_i(n, h, k, eps, params.ell_conf, x)));
    out.theta_per_iteration.push_back(theta);
    out.sample.grow_to(theta, g, model, params.threads);
    out.iterations = static_cast<std::size_t>(i);
    const GreedyResult trial = rc_greedy(out.sample, params.constraints, params.engine);
    const double estimate = trial.trace.estimated_score;
    if (estimate >= (1.0 + eps) * x) {
      out.lower_bound = estimate / (1.0 + eps);
      out.fallback = false;
      break;
    }
  }
  const double final_theta = std::ceil(out.lambda / out.lower_bound);
  if (final_theta > static_cast<double>(std::numeric_limits<std::uint32_t>::max())) {
    throw ResourceError("required sample size " + std::to_string(final_theta) +
                        " exceeds the supported number of RC-sets");
  }
  out.sample.grow_to(static_cast<std::size_t>(final_theta), g, model, params.threads);
  out.sample.reset_spans();
  return out;
}

GreedyResult tdem(const SocialGraph& g, const ItemCatalog& items,
                  const PropagationModel& model, const TdemParams& params) {
  SamplingResult sampled = sampling_phase(g, items, model, params);
  GreedyResult result = rc_greedy(sampled.sample, params.constraints, params.engine);
  result.trace.lower_bound = sampled.lower_bound;
  result.trace.lambda = sampled.lambda;
  result.trace.sampling_iterations = sampled.iterations;
  result.trace.lower_bound_fallback = sampled.fallback;
  return result;
}

}  // namespace divexp
