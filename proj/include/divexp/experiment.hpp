#pragma once

// Experiment driver: flat key=value configuration, instance loading, running
// one algorithm, scoring its assignment and writing the report files.
//
// Report files written into output_dir:
//   report.txt         key=value records, byte-identical across reruns
//   summary.tsv        one header row and one data row, includes timings
//   node_exposure.tsv  node, leaning, estimated mean f_v
//   assignment.tsv     node<TAB>item

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "divexp/core.hpp"
#include "divexp/io.hpp"
#include "divexp/optimizer.hpp"
#include "divexp/world.hpp"

namespace divexp {

enum class Algorithm { Tdem, ExactGreedy, McGreedy, Close, Far, Weight };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view name);

struct ExperimentConfig {
  std::filesystem::path graph;
  std::filesystem::path node_leanings;
  std::filesystem::path items;  // empty: item_count items spread evenly
  std::size_t item_count = 25;
  std::string prob_mode = "exp";  // lin | exp | wc | explicit
  double beta = 0.25;
  double gamma = 2.0;
  std::filesystem::path prob_file;
  std::size_t k = 5;
  std::size_t ku = 1;
  std::filesystem::path ku_overrides;
  double epsilon = 0.2;
  double ell_conf = 1.0;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> eval_seed;
  Algorithm algorithm = Algorithm::Tdem;
  std::size_t trials = 10000;
  std::size_t mc_greedy_trials = 1000;
  std::filesystem::path output_dir;
  unsigned threads = 1;
  std::size_t memory_budget_mb = 8192;
  GreedyEngine engine = GreedyEngine::Lazy;
  std::size_t exact_cap = 20;

  // Every accepted key, in canonical order.
  static const std::vector<std::string>& keys();

  // Throws ConfigError for unknown keys or malformed values.
  void set(std::string_view key, std::string_view value);

  // Lines "key = value"; '#' starts a comment line.
  static ExperimentConfig from_file(const std::filesystem::path& path);

  // Ranges, required paths and seed separation.
  void validate() const;

  std::uint64_t evaluation_seed() const;

  // Canonical (key, value) pairs; unset optional paths are empty strings.
  std::vector<std::pair<std::string, std::string>> entries() const;
};

struct Instance {
  LoadedGraph graph;
  LoadedItems items;
  PropagationModel model;
  ConstraintSet constraints;
};

Instance load_instance(const ExperimentConfig& cfg);

struct ScoreReport {
  std::string algorithm;
  std::vector<std::pair<std::string, std::string>> config;
  double score = 0.0;
  double std_error = 0.0;
  std::size_t eval_trials = 0;
  std::uint64_t eval_seed = 0;
  std::vector<double> per_node;
  AssignmentStats stats;
  bool exhausted = false;
  // Sampling trace; zero for algorithms that do not sample.
  std::size_t sample_size = 0;
  std::size_t total_members = 0;
  double lower_bound = 0.0;
  double lambda = 0.0;
  std::size_t sampling_iterations = 0;
  bool lower_bound_fallback = false;
  double estimated_score = 0.0;
  std::size_t peak_memory_bytes = 0;
  double runtime_seconds = 0.0;
  Assignment assignment;
  std::vector<std::pair<std::string, std::string>> pair_names;
};

// Runs the configured algorithm on `inst` and scores the result.
ScoreReport run_on_instance(const ExperimentConfig& cfg, const Instance& inst);

// load_instance + run_on_instance, then writes the report files when
// output_dir is set.
ScoreReport run_experiment(const ExperimentConfig& cfg);

// Content of report.txt. Leaves out timings, memory and thread count.
std::string structured_report(const ScoreReport& r);
void write_report_files(const ScoreReport& r, const Instance& inst,
                        const std::filesystem::path& dir);

struct ParsedReport {
  std::vector<std::pair<std::string, std::string>> records;
  ExperimentConfig config;
  std::vector<std::pair<std::string, std::string>> pairs;

  const std::string& at(std::string_view key) const;
};

ParsedReport read_report(const std::filesystem::path& path);

// Scores `a` with the configured evaluator.
McEstimate evaluate(const ExperimentConfig& cfg, const Instance& inst, const Assignment& a,
                    bool per_node = false);

// Peak resident set size of this process, 0 when unavailable.
std::size_t peak_memory_bytes();

}  // namespace divexp
