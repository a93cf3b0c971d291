#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "divexp/baselines.hpp"
#include "divexp/experiment.hpp"
#include "divexp/world.hpp"

using namespace divexp;
namespace fs = std::filesystem;

namespace {

class ExperimentTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("divexp_exp_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    SynthSpec spec;
    spec.nodes = 40;
    spec.edges = 240;
    spec.leanings = SynthSpec::Leanings::Polarized;
    spec.seed = 5;
    write_synthetic(spec, dir_ / "edges.tsv", dir_ / "leanings.tsv");
    cfg_.graph = dir_ / "edges.tsv";
    cfg_.node_leanings = dir_ / "leanings.tsv";
    cfg_.item_count = 5;
    cfg_.k = 3;
    cfg_.trials = 500;
    cfg_.seed = 11;
  }
  void TearDown() override { fs::remove_all(dir_); }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path dir_;
  ExperimentConfig cfg_;
};

}  // namespace

TEST_F(ExperimentTest, CloseReportMatchesDirectComputation) {
  cfg_.algorithm = Algorithm::Close;
  cfg_.output_dir = dir_ / "out";
  const ScoreReport r = run_experiment(cfg_);

  const auto g = load_graph(cfg_.graph, cfg_.node_leanings);
  const auto items = make_items(5);
  const auto model = PropagationModel::exponential(0.25, 2.0);
  const auto expected = baseline_close(g.graph, items, ConstraintSet(3, 1)).assignment;
  const auto est = mc_score(g.graph, items, model, expected, 500, cfg_.evaluation_seed());
  EXPECT_EQ(r.assignment, expected);
  EXPECT_EQ(r.score, est.mean);
  EXPECT_EQ(r.std_error, est.std_error);

  for (const char* f : {"report.txt", "summary.tsv", "node_exposure.tsv", "assignment.tsv"}) {
    EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;
  }
  const std::string report = slurp(dir_ / "out" / "report.txt");
  EXPECT_EQ(report.rfind("format_version=1\n", 0), 0u);
  EXPECT_NE(report.find("\nscore=" + format_double(est.mean) + "\n"), std::string::npos);
}

TEST_F(ExperimentTest, RepeatedRunsGiveIdenticalReports) {
  for (Algorithm a : {Algorithm::Tdem, Algorithm::Weight, Algorithm::McGreedy}) {
    cfg_.algorithm = a;
    cfg_.mc_greedy_trials = 50;
    cfg_.k = 2;
    cfg_.threads = 1;
    cfg_.output_dir = dir_ / "one";
    run_experiment(cfg_);
    cfg_.threads = 3;
    cfg_.output_dir = dir_ / "two";
    run_experiment(cfg_);
    EXPECT_EQ(slurp(dir_ / "one" / "report.txt"), slurp(dir_ / "two" / "report.txt"))
        << to_string(a);
  }
}

TEST_F(ExperimentTest, ReportReloadsAndRescoresExactly) {
  cfg_.algorithm = Algorithm::Tdem;
  cfg_.output_dir = dir_ / "out";
  const ScoreReport r = run_experiment(cfg_);
  const ParsedReport parsed = read_report(dir_ / "out" / "report.txt");
  EXPECT_EQ(parsed.at("algorithm"), "tdem");
  ASSERT_EQ(parsed.pairs.size(), r.assignment.size());
  const Instance inst = load_instance(parsed.config);
  Assignment a;
  for (const auto& [node, item] : parsed.pairs) {
    SeedPair p{};
    ASSERT_TRUE(inst.graph.names.find(node, p.node));
    ASSERT_TRUE(inst.items.names.find(item, p.item));
    a.add(p);
  }
  EXPECT_EQ(a, r.assignment);
  EXPECT_EQ(format_double(evaluate(parsed.config, inst, a).mean), parsed.at("score"));
}

TEST_F(ExperimentTest, PerNodeExposureSumsToScore) {
  cfg_.algorithm = Algorithm::Far;
  const ScoreReport r = run_experiment(cfg_);
  ASSERT_EQ(r.per_node.size(), 40u);
  double sum = 0.0;
  for (double x : r.per_node) sum += x;
  EXPECT_NEAR(sum, r.score, 1e-9);
}

TEST_F(ExperimentTest, ExactGreedyRunsOnTinyInstance) {
  std::ofstream(dir_ / "tiny_e.tsv") << "a\tb\nb\tc\n";
  std::ofstream(dir_ / "tiny_l.tsv") << "a\t-0.5\nb\t0\nc\t0.5\n";
  cfg_.graph = dir_ / "tiny_e.tsv";
  cfg_.node_leanings = dir_ / "tiny_l.tsv";
  cfg_.item_count = 2;
  cfg_.k = 2;
  cfg_.algorithm = Algorithm::ExactGreedy;
  const ScoreReport r = run_experiment(cfg_);
  EXPECT_EQ(r.assignment.size(), 2u);
  EXPECT_GT(r.estimated_score, 0.0);
}

TEST_F(ExperimentTest, ConfigFileWithRelativePaths) {
  std::ofstream(dir_ / "run.cfg") << "# experiment\n"
                                  << "graph = edges.tsv\n"
                                  << "node_leanings=leanings.tsv\n"
                                  << "algorithm = weight\n"
                                  << "k = 4\n"
                                  << "epsilon = 0.3\n";
  const auto cfg = ExperimentConfig::from_file(dir_ / "run.cfg");
  EXPECT_EQ(cfg.graph, dir_ / "edges.tsv");
  EXPECT_EQ(cfg.algorithm, Algorithm::Weight);
  EXPECT_EQ(cfg.k, 4u);
  EXPECT_EQ(cfg.epsilon, 0.3);
  EXPECT_NO_THROW(cfg.validate());
}

TEST_F(ExperimentTest, ConfigErrors) {
  ExperimentConfig c = cfg_;
  EXPECT_THROW(c.set("nonsense", "1"), ConfigError);
  EXPECT_THROW(c.set("k", "-3"), ConfigError);
  EXPECT_THROW(c.set("epsilon", "abc"), ConfigError);
  EXPECT_THROW(c.set("algorithm", "best"), ConfigError);
  EXPECT_THROW(c.set("prob_mode", "quadratic"), ConfigError);
  c.set("eval_seed", "11");
  EXPECT_THROW(c.validate(), ConfigError);
  c = cfg_;
  c.epsilon = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = cfg_;
  c.graph = dir_ / "missing.tsv";
  EXPECT_THROW(c.validate(), ConfigError);
  std::ofstream(dir_ / "bad.cfg") << "graph edges.tsv\n";
  EXPECT_THROW(ExperimentConfig::from_file(dir_ / "bad.cfg"), ParseError);
}

TEST_F(ExperimentTest, EveryKeyRoundTripsThroughEntries) {
  const auto entries = cfg_.entries();
  ASSERT_EQ(entries.size(), ExperimentConfig::keys().size());
  ExperimentConfig copy;
  for (std::size_t j = 0; j < entries.size(); ++j) {
    EXPECT_EQ(entries[j].first, ExperimentConfig::keys()[j]);
    copy.set(entries[j].first, entries[j].second);
  }
  EXPECT_EQ(copy.entries(), entries);
}

TEST_F(ExperimentTest, EvaluationSeedDiffersFromOptimizerSeed) {
  for (std::uint64_t s = 0; s < 1000; ++s) {
    ExperimentConfig c;
    c.seed = s;
    ASSERT_NE(c.evaluation_seed(), s);
  }
}
