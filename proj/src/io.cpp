#include "divexp/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <unordered_set>

#include "divexp/rng.hpp"

namespace divexp {
namespace {

class RecordReader {
 public:
  RecordReader(const std::filesystem::path& path, std::size_t fields)
      : file_(path.string()), in_(path), fields_(fields) {
    if (!in_) throw ConfigError("cannot open " + file_);
  }

  // Next non-comment record, split on TAB; false at end of file.
  bool next(std::vector<std::string_view>& out) {
    while (std::getline(in_, buffer_)) {
      ++line_;
      if (!buffer_.empty() && buffer_.back() == '\r') buffer_.pop_back();
      if (buffer_.empty() || buffer_.front() == '#') continue;
      out.clear();
      std::string_view rest = buffer_;
      while (true) {
        const auto tab = rest.find('\t');
        out.push_back(rest.substr(0, tab));
        if (tab == std::string_view::npos) break;
        rest.remove_prefix(tab + 1);
      }
      if (out.size() != fields_) {
        fail("expected " + std::to_string(fields_) + " TAB-separated fields, got " +
             std::to_string(out.size()));
      }
      for (std::string_view f : out) {
        if (f.empty()) fail("empty field");
      }
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(file_, line_, what); }

  double number(std::string_view text) const {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      fail("not a number: '" + std::string(text) + "'");
    }
    return value;
  }

  std::size_t count(std::string_view text) const {
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      fail("not a non-negative integer: '" + std::string(text) + "'");
    }
    return value;
  }

  double leaning(std::string_view text) const {
    const double value = number(text);
    try {
      return checked_leaning(value, "leaning");
    } catch (const ValidationError& e) {
      fail(e.what());
    }
  }

  std::uint32_t lookup(const NameTable& table, std::string_view name,
                       std::string_view kind) const {
    std::uint32_t id = 0;
    if (!table.find(name, id)) fail("unknown " + std::string(kind) + " '" + std::string(name) + "'");
    return id;
  }

 private:
  std::string file_;
  std::ifstream in_;
  std::size_t fields_;
  std::string buffer_;
  std::size_t line_ = 0;
};

struct NamedLeanings {
  NameTable names;
  std::vector<double> leanings;
};

NamedLeanings read_leanings(const std::filesystem::path& path, std::string_view kind) {
  RecordReader reader(path, 2);
  NamedLeanings out;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    std::uint32_t existing = 0;
    if (out.names.find(f[0], existing)) {
      reader.fail("duplicate " + std::string(kind) + " '" + std::string(f[0]) + "'");
    }
    out.leanings.push_back(reader.leaning(f[1]));
    out.names.add(std::string(f[0]));
  }
  return out;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

}  // namespace

NodeId NameTable::add(std::string name) {
  const auto id = static_cast<std::uint32_t>(names_.size());
  if (!ids_.emplace(name, id).second) throw ValidationError("duplicate id '" + name + "'");
  names_.push_back(std::move(name));
  return id;
}

bool NameTable::find(std::string_view name, std::uint32_t& id) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) return false;
  id = it->second;
  return true;
}

NameTable NameTable::numbered(std::size_t count) {
  NameTable t;
  for (std::size_t i = 0; i < count; ++i) t.add(std::to_string(i));
  return t;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

LoadedGraph load_graph(const std::filesystem::path& edge_path,
                       const std::filesystem::path& leaning_path) {
  NamedLeanings nodes = read_leanings(leaning_path, "node");
  RecordReader reader(edge_path, 2);
  std::vector<SocialGraph::Edge> edges;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    edges.push_back({reader.lookup(nodes.names, f[0], "node (no leaning given)"),
                     reader.lookup(nodes.names, f[1], "node (no leaning given)")});
  }
  const std::size_t n = nodes.leanings.size();
  return {SocialGraph(n, std::move(edges), std::move(nodes.leanings)), std::move(nodes.names)};
}

void write_graph(const SocialGraph& g, const NameTable& names,
                 const std::filesystem::path& edge_path,
                 const std::filesystem::path& leaning_path) {
  if (names.size() != g.node_count()) throw ValidationError("name table does not match graph");
  std::ofstream lean = open_output(leaning_path);
  for (NodeId v = 0; v < g.node_count(); ++v) {
    lean << names.name(v) << '\t' << format_double(g.leaning(v)) << '\n';
  }
  std::ofstream edges = open_output(edge_path);
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    const auto [u, v] = g.edge(e);
    edges << names.name(u) << '\t' << names.name(v) << '\n';
  }
  if (!lean || !edges) throw ResourceError("failed writing graph files");
}

ItemCatalog make_items(std::size_t h) {
  if (h == 0) throw ConfigError("item count must be at least 1");
  if (h == 1) return ItemCatalog({0.0});
  std::vector<double> leanings(h);
  for (std::size_t i = 0; i < h; ++i) {
    leanings[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(h - 1);
  }
  return ItemCatalog(std::move(leanings));
}

LoadedItems make_even_items(std::size_t h) { return {make_items(h), NameTable::numbered(h)}; }

LoadedItems load_items(const std::filesystem::path& path) {
  NamedLeanings items = read_leanings(path, "item");
  if (items.leanings.empty()) throw ConfigError(path.string() + ": no items");
  return {ItemCatalog(std::move(items.leanings)), std::move(items.names)};
}

PropagationModel load_explicit_probabilities(const std::filesystem::path& path,
                                             const LoadedGraph& graph,
                                             const LoadedItems& items) {
  RecordReader reader(path, 4);
  const std::size_t h = items.catalog.item_count();
  std::unordered_map<std::uint64_t, double> table;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    const NodeId u = reader.lookup(graph.names, f[0], "node");
    const NodeId v = reader.lookup(graph.names, f[1], "node");
    const ItemId i = reader.lookup(items.names, f[2], "item");
    const EdgeId e = graph.graph.find_edge(u, v);
    if (e == SocialGraph::kNoEdge) reader.fail("no edge " + std::string(f[0]) + " -> " + std::string(f[1]));
    const double p = reader.number(f[3]);
    if (!(p >= 0.0 && p <= 1.0)) reader.fail("probability outside [0, 1]");
    if (!table.emplace(static_cast<std::uint64_t>(e) * h + i, p).second) {
      reader.fail("duplicate probability entry");
    }
  }
  return PropagationModel::explicit_table(h, std::move(table));
}

std::map<NodeId, std::size_t> load_attention_overrides(const std::filesystem::path& path,
                                                       const LoadedGraph& graph) {
  RecordReader reader(path, 2);
  std::map<NodeId, std::size_t> out;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    const NodeId u = reader.lookup(graph.names, f[0], "node");
    const std::size_t bound = reader.count(f[1]);
    if (bound < 1) reader.fail("attention bound must be at least 1");
    if (!out.emplace(u, bound).second) reader.fail("duplicate attention bound");
  }
  return out;
}

Assignment load_assignment(const std::filesystem::path& path, const LoadedGraph& graph,
                           const LoadedItems& items) {
  RecordReader reader(path, 2);
  Assignment a;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    const SeedPair p{reader.lookup(graph.names, f[0], "node"),
                     reader.lookup(items.names, f[1], "item")};
    if (!a.add(p)) reader.fail("duplicate seed pair");
  }
  return a;
}

void write_assignment(const Assignment& a, const LoadedGraph& graph, const LoadedItems& items,
                      const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  for (SeedPair p : a.pairs()) {
    out << graph.names.name(p.node) << '\t' << items.names.name(p.item) << '\n';
  }
}

SocialGraph SynthGraph::build() const {
  return SocialGraph(leanings.size(), edges, leanings);
}

double polarized_cdf(double x, double mean, double sd) {
  auto normal = [&](double center, double at) {
    return 0.5 * std::erfc(-(at - center) / (sd * std::sqrt(2.0)));
  };
  auto truncated = [&](double center) {
    const double lo = normal(center, -1.0);
    const double hi = normal(center, 1.0);
    return (normal(center, std::clamp(x, -1.0, 1.0)) - lo) / (hi - lo);
  };
  return 0.5 * truncated(-mean) + 0.5 * truncated(mean);
}

SynthGraph generate_synthetic(const SynthSpec& spec) {
  const std::size_t n = spec.nodes;
  if (n == 0) throw ConfigError("synthetic graph needs at least one node");
  if (spec.edges > n * (n - 1)) {
    throw ConfigError("cannot place " + std::to_string(spec.edges) + " edges on " +
                      std::to_string(n) + " nodes without self-loops or repeats");
  }
  if (!(spec.homophily >= 0.0 && spec.homophily <= 1.0)) {
    throw ConfigError("homophily must lie in [0, 1]");
  }
  if (spec.leanings == SynthSpec::Leanings::Polarized &&
      !(spec.polar_sd > 0.0 && std::abs(spec.polar_mean) <= 1.0)) {
    throw ConfigError("polarized leanings need sd > 0 and |mean| <= 1");
  }

  Rng rng(stream_seed(spec.seed, 0));
  SynthGraph out;
  out.leanings.resize(n);
  if (spec.leanings == SynthSpec::Leanings::Uniform) {
    for (double& l : out.leanings) l = -1.0 + 2.0 * rng.uniform();
  } else {
    std::normal_distribution<double> normal(0.0, spec.polar_sd);
    for (double& l : out.leanings) {
      const double center = rng.uniform() < 0.5 ? -spec.polar_mean : spec.polar_mean;
      do {
        l = center + normal(rng.engine());
      } while (l < -1.0 || l > 1.0);
    }
  }

  std::vector<NodeId> sides[2];
  for (NodeId v = 0; v < n; ++v) sides[out.leanings[v] >= 0.0 ? 1 : 0].push_back(v);

  std::vector<double> source_cdf;
  if (spec.source_skew > 0.0) {
    source_cdf.resize(n);
    double acc = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      acc += std::pow(static_cast<double>(r + 1), -spec.source_skew);
      source_cdf[r] = acc;
    }
  }
  auto draw_source = [&]() -> NodeId {
    if (source_cdf.empty()) return static_cast<NodeId>(rng.below(n));
    const double u = rng.uniform() * source_cdf.back();
    const auto it = std::upper_bound(source_cdf.begin(), source_cdf.end(), u);
    return static_cast<NodeId>(std::min<std::size_t>(it - source_cdf.begin(), n - 1));
  };

  const std::size_t all_pairs = n * (n - 1);
  if (spec.edges * 2 > all_pairs && spec.homophily == 0.0 && spec.source_skew == 0.0) {
    // Dense request: shuffle the full pair list instead of rejection sampling.
    std::vector<SocialGraph::Edge> every;
    every.reserve(all_pairs);
    for (NodeId u = 0; u < n; ++u) {
      for (NodeId v = 0; v < n; ++v) {
        if (u != v) every.push_back({u, v});
      }
    }
    for (std::size_t i = 0; i < spec.edges; ++i) {
      std::swap(every[i], every[i + rng.below(every.size() - i)]);
    }
    every.resize(spec.edges);
    out.edges = std::move(every);
    return out;
  }

  std::unordered_set<std::uint64_t> seen;
  seen.reserve(spec.edges * 2);
  const std::size_t max_attempts = 64 * spec.edges + 1024;
  std::size_t attempts = 0;
  while (out.edges.size() < spec.edges) {
    if (++attempts > max_attempts) {
      throw ConfigError("could not place the requested edges; lower homophily or skew");
    }
    const NodeId u = draw_source();
    NodeId v;
    const auto& side = sides[out.leanings[u] >= 0.0 ? 1 : 0];
    if (spec.homophily > 0.0 && side.size() > 1 && rng.uniform() < spec.homophily) {
      v = side[rng.below(side.size())];
    } else {
      v = static_cast<NodeId>(rng.below(n));
    }
    if (u == v) continue;
    if (!seen.insert((static_cast<std::uint64_t>(u) << 32) | v).second) continue;
    out.edges.push_back({u, v});
  }
  return out;
}

void write_synthetic(const SynthSpec& spec, const std::filesystem::path& edge_path,
                     const std::filesystem::path& leaning_path) {
  const SynthGraph synth = generate_synthetic(spec);
  std::ofstream lean = open_output(leaning_path);
  for (NodeId v = 0; v < synth.leanings.size(); ++v) {
    lean << v << '\t' << format_double(synth.leanings[v]) << '\n';
  }
  std::ofstream edges = open_output(edge_path);
  for (const auto& e : synth.edges) edges << e.source << '\t' << e.target << '\n';
  if (!lean || !edges) throw ResourceError("failed writing synthetic graph");
}

}  // namespace divexp
