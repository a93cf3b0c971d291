#include "divexp/rc_sampler.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <string>
#include <unordered_map>

#include "parallel.hpp"

namespace divexp {
namespace {

constexpr char kMagic[4] = {'D', 'X', 'R', 'C'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::size_t kGrowBatchPerThread = 1024;
// Heap bookkeeping per allocated index vector.
constexpr std::size_t kAllocOverhead = 16;
// targets_, target_leanings_, offsets_ and spans_ entries of one set.
constexpr std::size_t kPerSetBytes =
    sizeof(NodeId) + sizeof(double) + sizeof(std::size_t) + sizeof(LeaningSpan);

static_assert(std::endian::native == std::endian::little,
              "RC sample files are written in host order, which must be little-endian");

template <typename T>
void write_pod(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::filesystem::path& path) {
  T value;
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw ParseError(path.string(), 0, "truncated RC sample file");
  }
  return value;
}

}  // namespace

RcGenerator::RcGenerator(const SocialGraph& g, const ItemCatalog& items,
                         const PropagationModel& model)
    : g_(g), items_(items), model_(model), stamp_(g.node_count(), 0) {
  if (g.node_count() == 0) throw ValidationError("RC-sets need a non-empty graph");
  if (static_cast<std::uint64_t>(g.node_count()) * items.item_count() >
      std::numeric_limits<PairId>::max()) {
    throw ResourceError("node_count * item_count exceeds the packed pair range");
  }
}

RcSet RcGenerator::generate(std::uint64_t seed) {
  Rng rng(seed);
  const auto target = static_cast<NodeId>(rng.below(g_.node_count()));
  return draw(target, rng);
}

RcSet RcGenerator::generate_for_target(NodeId target, std::uint64_t seed) {
  if (target >= g_.node_count()) throw ValidationError("RC-set target outside the graph");
  Rng rng(seed);
  return draw(target, rng);
}

RcSet RcGenerator::draw(NodeId target, Rng& rng) {
  const std::size_t h = items_.item_count();
  RcSet set;
  set.target = target;
  set.target_leaning = g_.leaning(target);
  for (ItemId item = 0; item < h; ++item) {
    if (++current_ == std::numeric_limits<std::uint32_t>::max()) {
      std::fill(stamp_.begin(), stamp_.end(), 0);
      current_ = 1;
    }
    queue_.clear();
    queue_.push_back(target);
    stamp_[target] = current_;
    set.members.push_back(pack_pair({target, item}, h));
    const double li = items_.leaning(item);
    for (std::size_t head = 0; head < queue_.size(); ++head) {
      const NodeId w = queue_[head];
      const double lw = g_.leaning(w);
      const std::size_t in_degree = g_.in_degree(w);
      for (const SocialGraph::InArc& arc : g_.in_arcs(w)) {
        if (stamp_[arc.source] == current_) continue;
        if (observer_) observer_(arc.edge, item);
        const double p = model_.probability(
            EdgeContext{arc.edge, item, g_.leaning(arc.source), lw, li, in_degree});
        if (!rng.bernoulli(p)) continue;
        stamp_[arc.source] = current_;
        queue_.push_back(arc.source);
        set.members.push_back(pack_pair({arc.source, item}, h));
      }
    }
  }
  std::sort(set.members.begin(), set.members.end());
  return set;
}

RcSet generate_rc_set(const SocialGraph& g, const ItemCatalog& items,
                      const PropagationModel& model, std::uint64_t rng_seed) {
  RcGenerator gen(g, items, model);
  return gen.generate(rng_seed);
}

RcSample::RcSample(std::size_t node_count, ItemCatalog items, std::uint64_t master_seed,
                   std::size_t byte_budget)
    : node_count_(node_count), items_(std::move(items)), master_seed_(master_seed),
      byte_budget_(byte_budget) {
  if (node_count_ == 0) throw ValidationError("RC sample needs a non-empty graph");
  const std::uint64_t pairs = static_cast<std::uint64_t>(node_count_) * items_.item_count();
  if (pairs > std::numeric_limits<PairId>::max()) {
    throw ResourceError("node_count * item_count exceeds the packed pair range");
  }
  index_.resize(pairs);
}

std::size_t RcSample::memory_bytes() const {
  return members_.capacity() * sizeof(PairId) + index_capacity_ * sizeof(std::uint32_t) +
         index_blocks_ * kAllocOverhead + index_.size() * sizeof(std::vector<std::uint32_t>) +
         targets_.capacity() * kPerSetBytes;
}

void RcSample::append(RcSet set) {
  if (targets_.size() >= std::numeric_limits<std::uint32_t>::max()) {
    throw ResourceError("RC sample is limited to 2^32 - 1 sets");
  }
  if (set.target >= node_count_) throw ValidationError("RC-set target outside the sample");
  for (PairId p : set.members) {
    if (p >= index_.size()) throw ValidationError("RC-set member outside the sample");
  }

  // Peak footprint of this append: index vectors that must grow, plus the old
  // and new member buffers coexisting while members_ is reallocated.
  std::size_t index_growth = 0;
  std::size_t new_blocks = 0;
  for (PairId p : set.members) {
    const auto& list = index_[p];
    if (list.size() == list.capacity()) {
      index_growth += std::max<std::size_t>(1, list.capacity());
      new_blocks += list.capacity() == 0;
    }
  }
  const std::size_t needed = members_.size() + set.members.size();
  std::size_t member_capacity = members_.capacity();
  std::size_t transient = 0;
  if (needed > member_capacity) {
    member_capacity = std::max(needed, member_capacity + member_capacity / 2);
    transient = member_capacity * sizeof(PairId);
  }
  std::size_t per_set = 0;
  if (targets_.size() == targets_.capacity()) {
    per_set = std::max<std::size_t>(16, targets_.capacity()) * kPerSetBytes;
  }
  const std::size_t peak = memory_bytes() + index_growth * sizeof(std::uint32_t) +
                           new_blocks * kAllocOverhead + transient + per_set;
  if (peak > byte_budget_) {
    throw ResourceError("RC sample exceeds its memory budget of " +
                        std::to_string(byte_budget_ >> 20) + " MiB at " +
                        std::to_string(size()) + " sets (" +
                        std::to_string(total_members()) + " members)");
  }

  const auto id = static_cast<std::uint32_t>(targets_.size());
  for (PairId p : set.members) {
    auto& list = index_[p];
    const std::size_t before = list.capacity();
    list.push_back(id);
    index_capacity_ += list.capacity() - before;
    index_blocks_ += before == 0;
  }
  targets_.push_back(set.target);
  target_leanings_.push_back(checked_leaning(set.target_leaning, "RC-set target"));
  spans_.push_back(LeaningSpan::at(target_leanings_.back()));
  if (member_capacity > members_.capacity()) members_.reserve(member_capacity);
  members_.insert(members_.end(), set.members.begin(), set.members.end());
  offsets_.push_back(members_.size());
}

void RcSample::grow_to(std::size_t count, const SocialGraph& g, const PropagationModel& model,
                       unsigned threads) {
  if (g.node_count() != node_count_) throw ValidationError("graph does not match RC sample");
  if (count <= size()) return;
  const unsigned workers = detail::resolve_threads(threads);
  std::vector<std::unique_ptr<RcGenerator>> generators(workers);
  const std::size_t batch = kGrowBatchPerThread * workers;
  std::vector<RcSet> pending;
  while (size() < count) {
    const std::size_t first = size();
    const std::size_t todo = std::min(batch, count - first);
    pending.assign(todo, RcSet{});
    detail::parallel_for(todo, workers, [&](std::size_t j, unsigned w) {
      if (!generators[w]) generators[w] = std::make_unique<RcGenerator>(g, items_, model);
      pending[j] = generators[w]->generate(stream_seed(master_seed_, first + j));
    });
    for (RcSet& set : pending) append(std::move(set));
  }
}

std::size_t RcSample::checked_size() const {
  if (empty()) throw ValidationError("RC sample is empty");
  return size();
}

double RcSample::weight(const Assignment& a) const {
  checked_size();
  a.validate(node_count_, item_count());
  std::unordered_map<std::uint32_t, LeaningSpan> touched;
  for (SeedPair p : a.pairs()) {
    const double li = items_.leaning(p.item);
    for (std::uint32_t set : sets_containing(p)) {
      auto [it, inserted] = touched.try_emplace(set, LeaningSpan::at(target_leanings_[set]));
      it->second = span_gain(it->second, li).span;
    }
  }
  double total = 0.0;
  // Sum in set order so the result does not depend on hash iteration order.
  std::vector<std::pair<std::uint32_t, double>> widths;
  widths.reserve(touched.size());
  for (const auto& [set, span] : touched) widths.emplace_back(set, span.width());
  std::sort(widths.begin(), widths.end());
  for (const auto& [set, w] : widths) total += w;
  return total / static_cast<double>(size());
}

double RcSample::apply_pair_total(SeedPair p) {
  const double li = items_.leaning(p.item);
  double total = 0.0;
  for (std::uint32_t set : sets_containing(p)) {
    const SpanGain g = span_gain(spans_[set], li);
    total += g.gain;
    spans_[set] = g.span;
  }
  return total;
}

double RcSample::peek_gain_total(SeedPair p) const {
  const double li = items_.leaning(p.item);
  double total = 0.0;
  for (std::uint32_t set : sets_containing(p)) total += span_gain(spans_[set], li).gain;
  return total;
}

void RcSample::reset_spans() {
  for (std::size_t s = 0; s < spans_.size(); ++s) spans_[s] = LeaningSpan::at(target_leanings_[s]);
}

void RcSample::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kFormatVersion);
  write_pod<std::uint64_t>(out, node_count_);
  write_pod<std::uint64_t>(out, item_count());
  write_pod<std::uint64_t>(out, master_seed_);
  write_pod<std::uint64_t>(out, size());
  for (std::size_t s = 0; s < size(); ++s) {
    const auto m = members(s);
    write_pod<std::uint32_t>(out, targets_[s]);
    write_pod<double>(out, target_leanings_[s]);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.size()));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(PairId)));
  }
  if (!out) throw ResourceError("failed writing " + path.string());
}

RcSample RcSample::load(const std::filesystem::path& path, const ItemCatalog& items,
                        std::size_t byte_budget) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ParseError(path.string(), 0, "not an RC sample file");
  }
  if (read_pod<std::uint32_t>(in, path) != kFormatVersion) {
    throw ParseError(path.string(), 0, "unsupported RC sample version");
  }
  const auto n = read_pod<std::uint64_t>(in, path);
  const auto h = read_pod<std::uint64_t>(in, path);
  const auto seed = read_pod<std::uint64_t>(in, path);
  const auto count = read_pod<std::uint64_t>(in, path);
  if (h != items.item_count()) {
    throw ConfigError("RC sample has " + std::to_string(h) + " items, catalog has " +
                      std::to_string(items.item_count()));
  }
  RcSample sample(n, items, seed, byte_budget);
  for (std::uint64_t s = 0; s < count; ++s) {
    RcSet set;
    set.target = read_pod<std::uint32_t>(in, path);
    set.target_leaning = read_pod<double>(in, path);
    set.members.resize(read_pod<std::uint32_t>(in, path));
    if (!in.read(reinterpret_cast<char*>(set.members.data()),
                 static_cast<std::streamsize>(set.members.size() * sizeof(PairId)))) {
      throw ParseError(path.string(), 0, "truncated RC sample file");
    }
    sample.append(std::move(set));
  }
  return sample;
}

}  // namespace divexp
