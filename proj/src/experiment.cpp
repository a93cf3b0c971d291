#include "divexp/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <sstream>

#include "divexp/baselines.hpp"
#include "divexp/rng.hpp"
#include "divexp/world.hpp"

namespace divexp {
namespace {

constexpr int kReportVersion = 1;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_integer(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(std::string(key) + ": expected a non-negative integer, got '" +
                      std::string(value) + "'");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(value) +
                      "'");
  }
  return out;
}

GreedyEngine parse_engine(std::string_view value) {
  if (value == "lazy") return GreedyEngine::Lazy;
  if (value == "naive") return GreedyEngine::Naive;
  throw ConfigError("engine: expected lazy or naive, got '" + std::string(value) + "'");
}

void require_file(const std::filesystem::path& p, std::string_view key) {
  if (p.empty()) throw ConfigError(std::string(key) + " is required");
  if (!std::filesystem::is_regular_file(p)) {
    throw ConfigError(std::string(key) + ": no such file " + p.string());
  }
}

std::string flag(bool b) { return b ? "1" : "0"; }

std::vector<std::pair<std::string, std::string>> pair_names(const Assignment& a,
                                                            const Instance& inst) {
  std::vector<std::pair<std::string, std::string>> out;
  for (SeedPair p : a.pairs()) {
    out.emplace_back(inst.graph.names.name(p.node), inst.items.names.name(p.item));
  }
  return out;
}

}  // namespace

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Tdem: return "tdem";
    case Algorithm::ExactGreedy: return "exact-greedy";
    case Algorithm::McGreedy: return "mc-greedy";
    case Algorithm::Close: return "close";
    case Algorithm::Far: return "far";
    case Algorithm::Weight: return "weight";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::Tdem, Algorithm::ExactGreedy, Algorithm::McGreedy,
                      Algorithm::Close, Algorithm::Far, Algorithm::Weight}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("algorithm: unknown '" + std::string(name) +
                    "' (tdem, exact-greedy, mc-greedy, close, far, weight)");
}

const std::vector<std::string>& ExperimentConfig::keys() {
  static const std::vector<std::string> k = {
      "graph",     "node_leanings", "items",     "item_count",       "prob_mode",
      "beta",      "gamma",         "prob_file", "k",                "ku",
      "ku_overrides", "epsilon",    "ell_conf",  "seed",             "eval_seed",
      "algorithm", "trials",        "mc_greedy_trials", "output_dir", "threads",
      "memory_budget_mb", "engine", "exact_cap"};
  return k;
}

void ExperimentConfig::set(std::string_view key, std::string_view raw) {
  const std::string_view value = trim(raw);
  if (key == "graph") graph = value;
  else if (key == "node_leanings") node_leanings = value;
  else if (key == "items") items = value;
  else if (key == "item_count") item_count = parse_integer<std::size_t>(key, value);
  else if (key == "prob_mode") {
    if (value != "lin" && value != "exp" && value != "wc" && value != "explicit") {
      throw ConfigError("prob_mode: expected lin, exp, wc or explicit, got '" +
                        std::string(value) + "'");
    }
    prob_mode = value;
  } else if (key == "beta") beta = parse_real(key, value);
  else if (key == "gamma") gamma = parse_real(key, value);
  else if (key == "prob_file") prob_file = value;
  else if (key == "k") k = parse_integer<std::size_t>(key, value);
  else if (key == "ku") ku = parse_integer<std::size_t>(key, value);
  else if (key == "ku_overrides") ku_overrides = value;
  else if (key == "epsilon") epsilon = parse_real(key, value);
  else if (key == "ell_conf") ell_conf = parse_real(key, value);
  else if (key == "seed") seed = parse_integer<std::uint64_t>(key, value);
  else if (key == "eval_seed") {
    if (value.empty()) eval_seed.reset();
    else eval_seed = parse_integer<std::uint64_t>(key, value);
  } else if (key == "algorithm") algorithm = parse_algorithm(value);
  else if (key == "trials") trials = parse_integer<std::size_t>(key, value);
  else if (key == "mc_greedy_trials") mc_greedy_trials = parse_integer<std::size_t>(key, value);
  else if (key == "output_dir") output_dir = value;
  else if (key == "threads") threads = parse_integer<unsigned>(key, value);
  else if (key == "memory_budget_mb") memory_budget_mb = parse_integer<std::size_t>(key, value);
  else if (key == "engine") engine = parse_engine(value);
  else if (key == "exact_cap") exact_cap = parse_integer<std::size_t>(key, value);
  else throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  ExperimentConfig cfg;
  std::string line;
  std::size_t number = 0;
  const auto base = path.parent_path();
  while (std::getline(in, line)) {
    ++number;
    const std::string_view text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ParseError(path.string(), number, "expected key=value");
    const std::string key(trim(text.substr(0, eq)));
    try {
      cfg.set(key, text.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  // Relative paths in a config file are taken relative to the file.
  for (auto* p : {&cfg.graph, &cfg.node_leanings, &cfg.items, &cfg.prob_file,
                  &cfg.ku_overrides, &cfg.output_dir}) {
    if (!p->empty() && p->is_relative()) *p = base / *p;
  }
  return cfg;
}

void ExperimentConfig::validate() const {
  require_file(graph, "graph");
  require_file(node_leanings, "node_leanings");
  if (!items.empty()) require_file(items, "items");
  else if (item_count < 1) throw ConfigError("item_count must be at least 1");
  if (prob_mode == "explicit") require_file(prob_file, "prob_file");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be non-negative");
  if (k < 1) throw ConfigError("k must be at least 1");
  if (ku < 1) throw ConfigError("ku must be at least 1");
  if (!ku_overrides.empty()) require_file(ku_overrides, "ku_overrides");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
  if (!(ell_conf >= 1.0)) throw ConfigError("ell_conf must be at least 1");
  if (trials < 2) throw ConfigError("trials must be at least 2");
  if (mc_greedy_trials < 1) throw ConfigError("mc_greedy_trials must be at least 1");
  if (memory_budget_mb < 1) throw ConfigError("memory_budget_mb must be at least 1");
  if (exact_cap > 62) throw ConfigError("exact_cap must be at most 62");
  if (evaluation_seed() == seed) {
    throw ConfigError("eval_seed must differ from seed so scores are not fit to the optimizer");
  }
}

std::uint64_t ExperimentConfig::evaluation_seed() const {
  return eval_seed ? *eval_seed : mix64(seed ^ 0x5eed0e7a1ULL);
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries() const {
  const char* engine_name = engine == GreedyEngine::Lazy ? "lazy" : "naive";
  return {
      {"graph", graph.string()},
      {"node_leanings", node_leanings.string()},
      {"items", items.string()},
      {"item_count", std::to_string(item_count)},
      {"prob_mode", prob_mode},
      {"beta", format_double(beta)},
      {"gamma", format_double(gamma)},
      {"prob_file", prob_file.string()},
      {"k", std::to_string(k)},
      {"ku", std::to_string(ku)},
      {"ku_overrides", ku_overrides.string()},
      {"epsilon", format_double(epsilon)},
      {"ell_conf", format_double(ell_conf)},
      {"seed", std::to_string(seed)},
      {"eval_seed", std::to_string(evaluation_seed())},
      {"algorithm", to_string(algorithm)},
      {"trials", std::to_string(trials)},
      {"mc_greedy_trials", std::to_string(mc_greedy_trials)},
      {"output_dir", output_dir.string()},
      {"threads", std::to_string(threads)},
      {"memory_budget_mb", std::to_string(memory_budget_mb)},
      {"engine", engine_name},
      {"exact_cap", std::to_string(exact_cap)},
  };
}

Instance load_instance(const ExperimentConfig& cfg) {
  cfg.validate();
  LoadedGraph graph = load_graph(cfg.graph, cfg.node_leanings);
  LoadedItems items = cfg.items.empty() ? make_even_items(cfg.item_count) : load_items(cfg.items);
  auto model = [&] {
    if (cfg.prob_mode == "lin") return PropagationModel::linear(cfg.beta);
    if (cfg.prob_mode == "exp") return PropagationModel::exponential(cfg.beta, cfg.gamma);
    if (cfg.prob_mode == "wc") return PropagationModel::weighted_cascade();
    return load_explicit_probabilities(cfg.prob_file, graph, items);
  }();
  std::map<NodeId, std::size_t> overrides;
  if (!cfg.ku_overrides.empty()) overrides = load_attention_overrides(cfg.ku_overrides, graph);
  ConstraintSet constraints(cfg.k, cfg.ku, std::move(overrides));
  return {std::move(graph), std::move(items), std::move(model), std::move(constraints)};
}

McEstimate evaluate(const ExperimentConfig& cfg, const Instance& inst, const Assignment& a,
                    bool per_node) {
  return mc_score(inst.graph.graph, inst.items.catalog, inst.model, a, cfg.trials,
                  cfg.evaluation_seed(), McOptions{cfg.threads, per_node});
}

ScoreReport run_on_instance(const ExperimentConfig& cfg, const Instance& inst) {
  const auto start = std::chrono::steady_clock::now();
  const SocialGraph& g = inst.graph.graph;
  const ItemCatalog& catalog = inst.items.catalog;
  ScoreReport r;
  r.algorithm = to_string(cfg.algorithm);
  r.config = cfg.entries();

  switch (cfg.algorithm) {
    case Algorithm::Tdem: {
      TdemParams params;
      params.constraints = inst.constraints;
      params.epsilon = cfg.epsilon;
      params.ell_conf = cfg.ell_conf;
      params.master_seed = cfg.seed;
      params.threads = cfg.threads;
      params.byte_budget = cfg.memory_budget_mb << 20;
      params.engine = cfg.engine;
      GreedyResult res = tdem(g, catalog, inst.model, params);
      r.assignment = std::move(res.assignment);
      r.exhausted = res.trace.constraint_exhausted;
      r.sample_size = res.trace.sample_size;
      r.total_members = res.trace.total_members;
      r.lower_bound = res.trace.lower_bound;
      r.lambda = res.trace.lambda;
      r.sampling_iterations = res.trace.sampling_iterations;
      r.lower_bound_fallback = res.trace.lower_bound_fallback;
      r.estimated_score = res.trace.estimated_score;
      break;
    }
    case Algorithm::ExactGreedy: {
      const ExactOptions opts{cfg.exact_cap};
      GreedyResult res = exact_greedy(
          [&](const Assignment& a) { return exact_score(g, catalog, inst.model, a, opts); },
          inst.constraints, g.node_count(), catalog.item_count());
      r.assignment = std::move(res.assignment);
      r.exhausted = res.trace.constraint_exhausted;
      r.estimated_score = res.trace.estimated_score;
      break;
    }
    case Algorithm::McGreedy: {
      // Common random numbers: every candidate is scored on the same worlds.
      GreedyResult res = exact_greedy(
          [&](const Assignment& a) {
            return mc_score(g, catalog, inst.model, a, cfg.mc_greedy_trials, cfg.seed,
                            McOptions{cfg.threads, false})
                .mean;
          },
          inst.constraints, g.node_count(), catalog.item_count());
      r.assignment = std::move(res.assignment);
      r.exhausted = res.trace.constraint_exhausted;
      r.estimated_score = res.trace.estimated_score;
      break;
    }
    case Algorithm::Close:
    case Algorithm::Far:
    case Algorithm::Weight: {
      BaselineResult res = cfg.algorithm == Algorithm::Close
                               ? baseline_close(g, catalog, inst.constraints)
                           : cfg.algorithm == Algorithm::Far
                               ? baseline_far(g, catalog, inst.constraints)
                               : baseline_weight(g, catalog, inst.constraints);
      r.assignment = std::move(res.assignment);
      r.exhausted = res.exhausted;
      break;
    }
  }

  const McEstimate est = evaluate(cfg, inst, r.assignment, true);
  r.score = est.mean;
  r.std_error = est.std_error;
  r.eval_trials = est.trials;
  r.eval_seed = cfg.evaluation_seed();
  r.per_node = est.per_node;
  if (!r.assignment.empty()) r.stats = assignment_stats(r.assignment, g, catalog);
  r.pair_names = pair_names(r.assignment, inst);
  r.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.peak_memory_bytes = peak_memory_bytes();
  return r;
}

ScoreReport run_experiment(const ExperimentConfig& cfg) {
  const Instance inst = load_instance(cfg);
  ScoreReport r = run_on_instance(cfg, inst);
  if (!cfg.output_dir.empty()) write_report_files(r, inst, cfg.output_dir);
  return r;
}

std::string structured_report(const ScoreReport& r) {
  std::ostringstream out;
  out << "format_version=" << kReportVersion << '\n';
  for (const auto& [key, value] : r.config) {
    if (key == "output_dir" || key == "threads") continue;
    out << "config." << key << '=' << value << '\n';
  }
  out << "algorithm=" << r.algorithm << '\n'
      << "score=" << format_double(r.score) << '\n'
      << "std_error=" << format_double(r.std_error) << '\n'
      << "eval_trials=" << r.eval_trials << '\n'
      << "eval_seed=" << r.eval_seed << '\n'
      << "estimated_score=" << format_double(r.estimated_score) << '\n'
      << "sample_size=" << r.sample_size << '\n'
      << "total_members=" << r.total_members << '\n'
      << "lower_bound=" << format_double(r.lower_bound) << '\n'
      << "lambda=" << format_double(r.lambda) << '\n'
      << "sampling_iterations=" << r.sampling_iterations << '\n'
      << "lower_bound_fallback=" << flag(r.lower_bound_fallback) << '\n'
      << "constraint_exhausted=" << flag(r.exhausted) << '\n'
      << "stats.immediate_diversity=" << format_double(r.stats.immediate_diversity) << '\n'
      << "stats.mean_normalized_degree=" << format_double(r.stats.mean_normalized_degree)
      << '\n'
      << "stats.mean_out_degree=" << format_double(r.stats.mean_out_degree) << '\n'
      << "stats.mean_sq_node_leaning=" << format_double(r.stats.mean_sq_node_leaning) << '\n'
      << "stats.mean_sq_item_leaning=" << format_double(r.stats.mean_sq_item_leaning) << '\n'
      << "stats.distinct_items=" << r.stats.distinct_items << '\n'
      << "stats.distinct_item_fraction=" << format_double(r.stats.distinct_item_fraction)
      << '\n'
      << "pair_count=" << r.pair_names.size() << '\n';
  for (const auto& [node, item] : r.pair_names) out << "pair=" << node << '\t' << item << '\n';
  return out.str();
}

void write_report_files(const ScoreReport& r, const Instance& inst,
                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("report.txt");
    f << structured_report(r);
  }
  {
    auto f = open("summary.tsv");
    f << "algorithm\tscore\tstd_error\tpairs\tsample_size\truntime_s\tpeak_memory_mb\n"
      << r.algorithm << '\t' << format_double(r.score) << '\t' << format_double(r.std_error)
      << '\t' << r.assignment.size() << '\t' << r.sample_size << '\t'
      << format_double(r.runtime_seconds) << '\t'
      << format_double(static_cast<double>(r.peak_memory_bytes) / (1 << 20)) << '\n';
  }
  {
    auto f = open("node_exposure.tsv");
    f << "# node\tleaning\tmean_diversity\n";
    const SocialGraph& g = inst.graph.graph;
    for (NodeId v = 0; v < g.node_count(); ++v) {
      f << inst.graph.names.name(v) << '\t' << format_double(g.leaning(v)) << '\t'
        << format_double(v < r.per_node.size() ? r.per_node[v] : 0.0) << '\n';
    }
  }
  write_assignment(r.assignment, inst.graph, inst.items, dir / "assignment.tsv");
}

const std::string& ParsedReport::at(std::string_view key) const {
  for (const auto& [k, v] : records) {
    if (k == key) return v;
  }
  throw ConfigError("report has no '" + std::string(key) + "' record");
}

ParsedReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  ParsedReport out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(path.string(), number, "expected key=value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    if (key == "pair") {
      const auto tab = value.find('\t');
      if (tab == std::string::npos) throw ParseError(path.string(), number, "expected node<TAB>item");
      out.pairs.emplace_back(value.substr(0, tab), value.substr(tab + 1));
      continue;
    }
    if (key.starts_with("config.")) out.config.set(key.substr(7), value);
    out.records.emplace_back(std::move(key), std::move(value));
  }
  if (out.at("format_version") != std::to_string(kReportVersion)) {
    throw ParseError(path.string(), 1, "unsupported report version");
  }
  return out;
}

std::size_t peak_memory_bytes() {
  std::ifstream status("/proc/self/status");
  std::string line;
  while (std::getline(status, line)) {
    if (line.starts_with("VmHWM:")) {
      std::istringstream fields(line.substr(6));
      std::size_t kb = 0;
      fields >> kb;
      return kb * 1024;
    }
  }
  return 0;
}

}  // namespace divexp
