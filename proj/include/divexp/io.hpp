#pragma once

// Text formats. All files are UTF-8, one record per line, fields separated by
// a single TAB; blank lines and lines starting with '#' are ignored.
//
//   edges        source<TAB>target         (target follows source)
//   leanings     id<TAB>leaning            (nodes or items)
//   probabilities source<TAB>target<TAB>item<TAB>p
//   attention    node<TAB>bound
//   assignment   node<TAB>item
//
// Node and item ids are arbitrary strings, mapped to dense integers in the
// order they first appear in the leaning file.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "divexp/core.hpp"

namespace divexp {

// Dense id <-> original name.
class NameTable {
 public:
  NodeId add(std::string name);  // throws ValidationError on duplicates
  std::size_t size() const { return names_.size(); }
  const std::string& name(std::uint32_t id) const { return names_[id]; }
  std::span<const std::string> names() const { return names_; }
  // Returns false when `name` is unknown.
  bool find(std::string_view name, std::uint32_t& id) const;

  static NameTable numbered(std::size_t count);

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

struct LoadedGraph {
  SocialGraph graph;
  NameTable names;
};

struct LoadedItems {
  ItemCatalog catalog;
  NameTable names;
};

LoadedGraph load_graph(const std::filesystem::path& edge_path,
                       const std::filesystem::path& leaning_path);

// Writes leanings with 17 significant digits so a reload is exact.
void write_graph(const SocialGraph& g, const NameTable& names,
                 const std::filesystem::path& edge_path,
                 const std::filesystem::path& leaning_path);

// h items spread evenly over [-1, 1]: l(i) = -1 + 2i/(h-1); one item sits at 0.
ItemCatalog make_items(std::size_t h);
LoadedItems make_even_items(std::size_t h);
LoadedItems load_items(const std::filesystem::path& path);

PropagationModel load_explicit_probabilities(const std::filesystem::path& path,
                                             const LoadedGraph& graph,
                                             const LoadedItems& items);

std::map<NodeId, std::size_t> load_attention_overrides(const std::filesystem::path& path,
                                                       const LoadedGraph& graph);

Assignment load_assignment(const std::filesystem::path& path, const LoadedGraph& graph,
                           const LoadedItems& items);
void write_assignment(const Assignment& a, const LoadedGraph& graph, const LoadedItems& items,
                      const std::filesystem::path& path);

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

struct SynthSpec {
  enum class Leanings { Uniform, Polarized };

  std::size_t nodes = 100;
  std::size_t edges = 1000;
  Leanings leanings = Leanings::Uniform;
  // Polarized: equal mixture of normals at ±polar_mean with sd polar_sd,
  // truncated to [-1, 1].
  double polar_mean = 0.6;
  double polar_sd = 0.25;
  // Probability that an edge's target is drawn from the source's side
  // (sign of leaning) instead of from all nodes.
  double homophily = 0.0;
  // Sources are drawn with weight (rank + 1)^(-source_skew); 0 is uniform.
  double source_skew = 0.0;
  std::uint64_t seed = 1;
};

struct SynthGraph {
  std::vector<SocialGraph::Edge> edges;
  std::vector<double> leanings;

  SocialGraph build() const;
};

SynthGraph generate_synthetic(const SynthSpec& spec);
void write_synthetic(const SynthSpec& spec, const std::filesystem::path& edge_path,
                     const std::filesystem::path& leaning_path);

// CDF of the polarized leaning distribution.
double polarized_cdf(double x, double mean, double sd);

}  // namespace divexp
