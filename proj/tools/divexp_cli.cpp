#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "divexp/errors.hpp"
#include "divexp/experiment.hpp"
#include "divexp/io.hpp"
#include "divexp/optimizer.hpp"
#include "divexp/world.hpp"

namespace {

enum ExitCode : int {
  kOk = 0,
  kUnexpected = 1,
  kParse = 2,
  kConfig = 3,
  kResource = 4,
  kAssumption = 5,
};

struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> overrides;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& flags) {
  cmd->add_option("-c,--config", flags.config_path, "key=value configuration file");
  for (const std::string& key : divexp::ExperimentConfig::keys()) {
    cmd->add_option_function<std::string>(
        "--" + key, [&flags, key](const std::string& v) { flags.overrides[key] = v; },
        "override config key " + key);
  }
}

divexp::ExperimentConfig build_config(const ConfigFlags& flags) {
  divexp::ExperimentConfig cfg;
  if (!flags.config_path.empty()) cfg = divexp::ExperimentConfig::from_file(flags.config_path);
  if (const char* dir = std::getenv("DIVEXP_OUTPUT_DIR"); dir != nullptr && *dir != '\0') {
    cfg.output_dir = dir;
  }
  for (const auto& [key, value] : flags.overrides) cfg.set(key, value);
  return cfg;
}

int cmd_run(const ConfigFlags& flags) {
  const divexp::ExperimentConfig cfg = build_config(flags);
  const divexp::ScoreReport r = divexp::run_experiment(cfg);
  std::cout << divexp::structured_report(r);
  std::cerr << "runtime_s=" << divexp::format_double(r.runtime_seconds)
            << " peak_memory_mb=" << (r.peak_memory_bytes >> 20) << '\n';
  return kOk;
}

int cmd_sample(const ConfigFlags& flags, const std::string& out_path) {
  const divexp::ExperimentConfig cfg = build_config(flags);
  const divexp::Instance inst = divexp::load_instance(cfg);
  divexp::TdemParams params;
  params.constraints = inst.constraints;
  params.epsilon = cfg.epsilon;
  params.ell_conf = cfg.ell_conf;
  params.master_seed = cfg.seed;
  params.threads = cfg.threads;
  params.byte_budget = cfg.memory_budget_mb << 20;
  params.engine = cfg.engine;
  const divexp::SamplingResult s =
      divexp::sampling_phase(inst.graph.graph, inst.items.catalog, inst.model, params);
  s.sample.save(out_path);
  std::cout << "sample_size=" << s.sample.size() << '\n'
            << "total_members=" << s.sample.total_members() << '\n'
            << "lower_bound=" << divexp::format_double(s.lower_bound) << '\n'
            << "lambda=" << divexp::format_double(s.lambda) << '\n'
            << "iterations=" << s.iterations << '\n'
            << "lower_bound_fallback=" << (s.fallback ? 1 : 0) << '\n';
  return kOk;
}

int cmd_score(const ConfigFlags& flags, const std::string& report_path,
              const std::string& assignment_path) {
  if (!report_path.empty()) {
    const divexp::ParsedReport rep = divexp::read_report(report_path);
    const divexp::Instance inst = divexp::load_instance(rep.config);
    divexp::Assignment a;
    for (const auto& [node, item] : rep.pairs) {
      divexp::SeedPair p{};
      if (!inst.graph.names.find(node, p.node) || !inst.items.names.find(item, p.item)) {
        throw divexp::ValidationError("report pair " + node + "\t" + item +
                                      " is not in the instance");
      }
      a.add(p);
    }
    const divexp::McEstimate est = divexp::evaluate(rep.config, inst, a);
    const std::string score = divexp::format_double(est.mean);
    const bool match = score == rep.at("score");
    std::cout << "score=" << score << '\n'
              << "std_error=" << divexp::format_double(est.std_error) << '\n'
              << "reported_score=" << rep.at("score") << '\n'
              << "reproduced=" << (match ? 1 : 0) << '\n';
    return match ? kOk : kUnexpected;
  }
  if (assignment_path.empty()) {
    throw divexp::ConfigError("score needs --report or --assignment");
  }
  const divexp::ExperimentConfig cfg = build_config(flags);
  const divexp::Instance inst = divexp::load_instance(cfg);
  const divexp::Assignment a =
      divexp::load_assignment(assignment_path, inst.graph, inst.items);
  const divexp::McEstimate est = divexp::evaluate(cfg, inst, a);
  std::cout << "score=" << divexp::format_double(est.mean) << '\n'
            << "std_error=" << divexp::format_double(est.std_error) << '\n'
            << "trials=" << est.trials << '\n'
            << "eval_seed=" << cfg.evaluation_seed() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diversity exposure maximization"};
  app.require_subcommand(1);

  ConfigFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "select seed pairs and score them");
  add_config_flags(run, run_flags);

  ConfigFlags sample_flags;
  std::string sample_out;
  CLI::App* sample = app.add_subcommand("sample", "run the sampling phase and save the RC sample");
  add_config_flags(sample, sample_flags);
  sample->add_option("-o,--out", sample_out, "output file")->required();

  ConfigFlags score_flags;
  std::string report_path;
  std::string assignment_path;
  CLI::App* score = app.add_subcommand("score", "re-score an assignment");
  add_config_flags(score, score_flags);
  score->add_option("--report", report_path, "report.txt written by run");
  score->add_option("--assignment", assignment_path, "node<TAB>item file");

  divexp::SynthSpec spec;
  std::string synth_edges;
  std::string synth_leanings;
  std::string leaning_kind = "uniform";
  CLI::App* synth = app.add_subcommand("synth", "write a random graph");
  synth->add_option("--nodes", spec.nodes, "node count")->required();
  synth->add_option("--edges", spec.edges, "edge count")->required();
  synth->add_option("--leaning-dist", leaning_kind, "uniform or polarized")
      ->check(CLI::IsMember({"uniform", "polarized"}));
  synth->add_option("--polar-mean", spec.polar_mean, "mode position for polarized leanings");
  synth->add_option("--polar-sd", spec.polar_sd, "mode spread for polarized leanings");
  synth->add_option("--homophily", spec.homophily, "same-side target probability");
  synth->add_option("--source-skew", spec.source_skew, "power-law exponent of source choice");
  synth->add_option("--seed", spec.seed, "random seed");
  synth->add_option("--edges-out", synth_edges, "edge file")->required();
  synth->add_option("--leanings-out", synth_leanings, "node leaning file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*run) return cmd_run(run_flags);
    if (*sample) return cmd_sample(sample_flags, sample_out);
    if (*score) return cmd_score(score_flags, report_path, assignment_path);
    if (*synth) {
      spec.leanings = leaning_kind == "polarized" ? divexp::SynthSpec::Leanings::Polarized
                                                  : divexp::SynthSpec::Leanings::Uniform;
      divexp::write_synthetic(spec, synth_edges, synth_leanings);
      return kOk;
    }
  } catch (const divexp::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kParse;
  } catch (const divexp::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const divexp::ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kConfig;
  } catch (const divexp::ResourceError& e) {
    std::cerr << "resource limit: " << e.what() << '\n';
    return kResource;
  } catch (const divexp::AssumptionError& e) {
    std::cerr << "degenerate instance: " << e.what() << '\n';
    return kAssumption;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUnexpected;
  }
  return kUnexpected;
}
