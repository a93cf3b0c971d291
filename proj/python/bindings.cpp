#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <utility>
#include <vector>

#include "divexp/baselines.hpp"
#include "divexp/core.hpp"
#include "divexp/errors.hpp"
#include "divexp/experiment.hpp"
#include "divexp/io.hpp"
#include "divexp/optimizer.hpp"
#include "divexp/rc_sampler.hpp"
#include "divexp/world.hpp"

namespace py = pybind11;
using namespace divexp;

namespace {

using PairList = std::vector<std::pair<NodeId, ItemId>>;

Assignment to_assignment(const PairList& pairs) {
  Assignment a;
  for (const auto& [u, i] : pairs) {
    if (!a.add({u, i})) throw ValidationError("duplicate seed pair in assignment");
  }
  return a;
}

PairList to_pairs(const Assignment& a) {
  PairList out;
  for (SeedPair p : a.pairs()) out.emplace_back(p.node, p.item);
  return out;
}

py::dict trace_dict(const GreedyTrace& t) {
  py::dict d;
  d["gains"] = t.gains;
  d["estimated_score"] = t.estimated_score;
  d["sample_size"] = t.sample_size;
  d["total_members"] = t.total_members;
  d["lower_bound"] = t.lower_bound;
  d["lambda"] = t.lambda;
  d["sampling_iterations"] = t.sampling_iterations;
  d["lower_bound_fallback"] = t.lower_bound_fallback;
  d["constraint_exhausted"] = t.constraint_exhausted;
  return d;
}

ConstraintSet make_constraints(std::size_t k, std::size_t ku,
                               std::map<NodeId, std::size_t> overrides) {
  return ConstraintSet(k, ku, std::move(overrides));
}

}  // namespace

PYBIND11_MODULE(_divexp, m) {
  m.doc() = "Diversity exposure maximization: seed (node, item) pairs so that users see a wide range of leanings.";

  static py::exception<Error> base(m, "Error");
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ResourceError>(m, "ResourceError", base.ptr());
  py::register_exception<AssumptionError>(m, "AssumptionError", base.ptr());

  py::class_<SocialGraph>(m, "SocialGraph")
      .def(py::init([](std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& edges,
                       std::vector<double> leanings) {
             std::vector<SocialGraph::Edge> es;
             es.reserve(edges.size());
             for (const auto& [u, v] : edges) es.push_back({u, v});
             return SocialGraph(n, std::move(es), std::move(leanings));
           }),
           py::arg("node_count"), py::arg("edges"), py::arg("leanings"))
      .def_property_readonly("node_count", &SocialGraph::node_count)
      .def_property_readonly("edge_count", &SocialGraph::edge_count)
      .def("leaning", &SocialGraph::leaning)
      .def("out_degree", &SocialGraph::out_degree)
      .def("in_degree", &SocialGraph::in_degree)
      .def("edges", [](const SocialGraph& g) {
        std::vector<std::pair<NodeId, NodeId>> out;
        for (EdgeId e = 0; e < g.edge_count(); ++e) {
          const auto [u, v] = g.edge(e);
          out.emplace_back(u, v);
        }
        return out;
      });

  py::class_<ItemCatalog>(m, "ItemCatalog")
      .def(py::init<std::vector<double>>(), py::arg("leanings"))
      .def_property_readonly("item_count", &ItemCatalog::item_count)
      .def("leaning", &ItemCatalog::leaning)
      .def_property_readonly("leanings", [](const ItemCatalog& c) {
        return std::vector<double>(c.leanings().begin(), c.leanings().end());
      });

  m.def("make_items", &make_items, py::arg("count"),
        "Items with leanings spread evenly over [-1, 1].");

  py::class_<PropagationModel>(m, "PropagationModel")
      .def_static("linear", &PropagationModel::linear, py::arg("beta"))
      .def_static("exponential", &PropagationModel::exponential, py::arg("beta"),
                  py::arg("gamma"))
      .def_static("weighted_cascade", &PropagationModel::weighted_cascade)
      .def_static(
          "explicit",
          [](const SocialGraph& g, std::size_t item_count,
             const std::map<std::tuple<NodeId, NodeId, ItemId>, double>& probs) {
            std::unordered_map<std::uint64_t, double> table;
            for (const auto& [key, p] : probs) {
              const auto [u, v, i] = key;
              const EdgeId e = g.find_edge(u, v);
              if (e == SocialGraph::kNoEdge) throw ValidationError("probability for a missing edge");
              table[static_cast<std::uint64_t>(e) * item_count + i] = p;
            }
            return PropagationModel::explicit_table(item_count, std::move(table));
          },
          py::arg("graph"), py::arg("item_count"), py::arg("probabilities"))
      .def("probability",
           py::overload_cast<const SocialGraph&, const ItemCatalog&, EdgeId, ItemId>(
               &PropagationModel::probability, py::const_),
           py::arg("graph"), py::arg("items"), py::arg("edge"), py::arg("item"));

  py::class_<ConstraintSet>(m, "ConstraintSet")
      .def(py::init(&make_constraints), py::arg("k"), py::arg("attention") = 1,
           py::arg("overrides") = std::map<NodeId, std::size_t>{})
      .def_property_readonly("budget", &ConstraintSet::budget)
      .def("attention", &ConstraintSet::attention);

  m.def(
      "exact_score",
      [](const SocialGraph& g, const ItemCatalog& items, const PropagationModel& model,
         const PairList& a, std::size_t max_uncertain_edges) {
        return exact_score(g, items, model, to_assignment(a), ExactOptions{max_uncertain_edges});
      },
      py::arg("graph"), py::arg("items"), py::arg("model"), py::arg("assignment"),
      py::arg("max_uncertain_edges") = 20);

  m.def(
      "mc_score",
      [](const SocialGraph& g, const ItemCatalog& items, const PropagationModel& model,
         const PairList& a, std::size_t trials, std::uint64_t seed, unsigned threads) {
        py::gil_scoped_release release;
        const McEstimate est = mc_score(g, items, model, to_assignment(a), trials, seed,
                                        McOptions{threads, false});
        return std::make_pair(est.mean, est.std_error);
      },
      py::arg("graph"), py::arg("items"), py::arg("model"), py::arg("assignment"),
      py::arg("trials"), py::arg("seed"), py::arg("threads") = 1,
      "Monte-Carlo estimate of the score; returns (mean, std_error).");

  m.def(
      "diversity_level",
      [](double node_leaning, const std::vector<double>& item_leanings) {
        return diversity_level(node_leaning, item_leanings);
      },
      py::arg("node_leaning"), py::arg("item_leanings"));

  py::class_<RcSample>(m, "RcSample")
      .def(py::init([](std::size_t n, const ItemCatalog& items, std::uint64_t seed) {
             return RcSample(n, items, seed);
           }),
           py::arg("node_count"), py::arg("items"), py::arg("seed"))
      .def("grow_to", &RcSample::grow_to, py::arg("count"), py::arg("graph"), py::arg("model"),
           py::arg("threads") = 1, py::call_guard<py::gil_scoped_release>())
      .def("__len__", &RcSample::size)
      .def_property_readonly("total_members", &RcSample::total_members)
      .def("members",
           [](const RcSample& s, std::size_t set) {
             if (set >= s.size()) throw py::index_error("RC-set index out of range");
             PairList out;
             for (PairId p : s.members(set)) {
               const SeedPair sp = unpack_pair(p, s.item_count());
               out.emplace_back(sp.node, sp.item);
             }
             return out;
           })
      .def("target", [](const RcSample& s, std::size_t set) {
        if (set >= s.size()) throw py::index_error("RC-set index out of range");
        return s.target(set);
      })
      .def("weight", [](const RcSample& s, const PairList& a) { return s.weight(to_assignment(a)); })
      .def("save", &RcSample::save)
      .def_static("load", [](const std::filesystem::path& p, const ItemCatalog& items) {
        return RcSample::load(p, items);
      });

  m.def("lambda_bound", &lambda_bound, py::arg("n"), py::arg("h"), py::arg("k"),
        py::arg("epsilon"), py::arg("ell_conf"));
  m.def("log_binom", &log_binom, py::arg("a"), py::arg("b"));

  m.def(
      "rc_greedy",
      [](RcSample& sample, const ConstraintSet& c, bool lazy) {
        const GreedyResult r = rc_greedy(sample, c, lazy ? GreedyEngine::Lazy : GreedyEngine::Naive);
        return std::make_pair(to_pairs(r.assignment), trace_dict(r.trace));
      },
      py::arg("sample"), py::arg("constraints"), py::arg("lazy") = true);

  m.def(
      "tdem",
      [](const SocialGraph& g, const ItemCatalog& items, const PropagationModel& model,
         const ConstraintSet& c, double epsilon, double ell_conf, std::uint64_t seed,
         unsigned threads) {
        TdemParams params;
        params.constraints = c;
        params.epsilon = epsilon;
        params.ell_conf = ell_conf;
        params.master_seed = seed;
        params.threads = threads;
        GreedyResult r;
        {
          py::gil_scoped_release release;
          r = tdem(g, items, model, params);
        }
        return std::make_pair(to_pairs(r.assignment), trace_dict(r.trace));
      },
      py::arg("graph"), py::arg("items"), py::arg("model"), py::arg("constraints"),
      py::arg("epsilon") = 0.2, py::arg("ell_conf") = 1.0, py::arg("seed") = 1,
      py::arg("threads") = 1,
      "Two-phase sampling and greedy selection; returns (pairs, trace).");

  m.def(
      "exact_greedy",
      [](const SocialGraph& g, const ItemCatalog& items, const PropagationModel& model,
         const ConstraintSet& c) {
        const GreedyResult r = exact_greedy(
            [&](const Assignment& a) { return exact_score(g, items, model, a); }, c,
            g.node_count(), items.item_count());
        return to_pairs(r.assignment);
      },
      py::arg("graph"), py::arg("items"), py::arg("model"), py::arg("constraints"));

  m.def("baseline_close", [](const SocialGraph& g, const ItemCatalog& items,
                             const ConstraintSet& c) {
    return to_pairs(baseline_close(g, items, c).assignment);
  });
  m.def("baseline_far", [](const SocialGraph& g, const ItemCatalog& items,
                           const ConstraintSet& c) {
    return to_pairs(baseline_far(g, items, c).assignment);
  });
  m.def("baseline_weight", [](const SocialGraph& g, const ItemCatalog& items,
                              const ConstraintSet& c) {
    return to_pairs(baseline_weight(g, items, c).assignment);
  });

  m.def(
      "generate_synthetic",
      [](std::size_t nodes, std::size_t edges, bool polarized, double homophily,
         std::uint64_t seed) {
        SynthSpec spec;
        spec.nodes = nodes;
        spec.edges = edges;
        spec.leanings = polarized ? SynthSpec::Leanings::Polarized : SynthSpec::Leanings::Uniform;
        spec.homophily = homophily;
        spec.seed = seed;
        return generate_synthetic(spec).build();
      },
      py::arg("nodes"), py::arg("edges"), py::arg("polarized") = false,
      py::arg("homophily") = 0.0, py::arg("seed") = 1);

  m.def(
      "run_experiment",
      [](const std::map<std::string, std::string>& settings) {
        ExperimentConfig cfg;
        for (const auto& [k, v] : settings) cfg.set(k, v);
        ScoreReport r;
        {
          py::gil_scoped_release release;
          r = run_experiment(cfg);
        }
        return structured_report(r);
      },
      py::arg("settings"),
      "Runs one configured experiment and returns the structured report text.");
}
