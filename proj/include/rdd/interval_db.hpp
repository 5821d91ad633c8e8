#pragma once

// Reference database of interval features with nearest-neighbour queries
// under angular distance. Approximate search uses a forest of
// random-projection trees; exact search is a linear scan.
//
// Index file layout (little-endian):
//   "RDDI" u32 version(1) u32 mode u32 dim u64 entries u32 leaf_max
//   u32 tree_count u64 seed u8 exact
//   entries x { str demo_id, u64 begin, u64 end, u32 duration }
//   entries x dim x f32 vectors
//   tree_count x { u32 node_count, node_count x node }
//   node := u8 kind; kind 0 (leaf): u32 n, n x u32 item
//                    kind 1 (split): i32 left, i32 right, f32 offset, dim x f32 normal
//                    kind 2 (fork): i32 left, i32 right

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rdd/binary_io.hpp"
#include "rdd/core.hpp"
#include "rdd/error.hpp"

namespace rdd {

enum class FeatureMode : std::uint32_t { full = 0, end_only = 1 };

inline std::string_view to_string(FeatureMode m) {
  return m == FeatureMode::full ? "full" : "end_only";
}

/// V(I) in full mode (begin and last frame, concatenated and renormalized) or
/// the last frame alone in end_only mode.
struct IntervalFeature {
  Embedding vector;
  std::size_t duration = 0;
  Interval source;
  FeatureMode mode = FeatureMode::full;
};

/// Writes the feature vector of [begin, end) into `out` (resized as needed).
inline void write_feature(const Demonstration& demo, std::size_t begin, std::size_t end,
                          FeatureMode mode, std::vector<float>& out) {
  const std::size_t d = demo.dim();
  const auto last = demo.frame(end - 1);
  if (mode == FeatureMode::end_only) {
    out.assign(last.begin(), last.end());
    return;
  }
  const auto first = demo.frame(begin);
  out.resize(2 * d);
  std::copy(first.begin(), first.end(), out.begin());
  std::copy(last.begin(), last.end(), out.begin() + static_cast<std::ptrdiff_t>(d));
  normalize_in_place(out);
}

inline IntervalFeature feature_of(const Demonstration& demo, const Interval& interval,
                                  FeatureMode mode) {
  require(interval.begin < interval.end && interval.end <= demo.length(), Errc::out_of_range,
          "interval [" + std::to_string(interval.begin) + ", " + std::to_string(interval.end) +
              ") outside demo '" + demo.id() + "' of length " + std::to_string(demo.length()));
  std::vector<float> v;
  write_feature(demo, interval.begin, interval.end, mode, v);
  Interval src = interval;
  if (src.demo_id.empty()) src.demo_id = demo.id();
  return IntervalFeature{Embedding(std::move(v)), interval.duration(), std::move(src), mode};
}

struct IndexOptions {
  std::size_t trees = 10;
  std::size_t leaf_max = 32;
  std::uint64_t seed = 0;
  /// Unset: exact search below kExactThreshold entries.
  std::optional<bool> exact;
};

inline constexpr std::size_t kExactThreshold = 50'000;
inline constexpr std::uint32_t kIndexVersion = 1;
inline constexpr char kIndexMagic[4] = {'R', 'D', 'D', 'I'};

struct Match {
  std::size_t entry = 0;
  double distance = 0.0;
};

class IntervalIndex {
 public:
  struct Node {
    enum class Kind : std::uint8_t { leaf = 0, split = 1, fork = 2 };
    Kind kind = Kind::leaf;
    std::int32_t left = -1;
    std::int32_t right = -1;
    float offset = 0.0f;
    std::vector<float> normal;
    std::vector<std::uint32_t> items;

    friend bool operator==(const Node&, const Node&) = default;
  };
  using Tree = std::vector<Node>;  // node 0 is the root

  IntervalIndex() = default;

  static IntervalIndex build(std::span<const IntervalFeature> features, const IndexOptions& opts) {
    require(!features.empty(), Errc::invalid_argument, "cannot build an index from no features");
    require(opts.leaf_max >= 1, Errc::invalid_argument, "leaf_max must be >= 1");
    require(features.size() <= std::numeric_limits<std::uint32_t>::max(), Errc::invalid_argument,
            "too many index entries");
    IntervalIndex idx;
    idx.mode_ = features.front().mode;
    idx.dim_ = features.front().vector.dim();
    idx.leaf_max_ = opts.leaf_max;
    idx.seed_ = opts.seed;
    idx.exact_ = opts.exact.value_or(features.size() < kExactThreshold);
    require(idx.exact_ || opts.trees > 0, Errc::invalid_argument,
            "approximate search needs at least one tree");
    idx.vectors_.reserve(features.size() * idx.dim_);
    for (const auto& f : features) {
      require(f.mode == idx.mode_, Errc::invalid_argument, "features mix full and end_only modes");
      require(f.vector.dim() == idx.dim_, Errc::dimension_mismatch,
              "features disagree on dimension (" + std::to_string(f.vector.dim()) + " vs " +
                  std::to_string(idx.dim_) + ")");
      require(f.duration > 0, Errc::invalid_argument, "feature with zero duration");
      std::vector<float> v = f.vector.data();
      normalize_in_place(v);
      idx.vectors_.insert(idx.vectors_.end(), v.begin(), v.end());
      idx.durations_.push_back(f.duration);
      idx.sources_.push_back(f.source);
    }
    for (std::size_t t = 0; t < opts.trees; ++t) idx.forest_.push_back(idx.grow_tree(t));
    return idx;
  }

  FeatureMode mode() const noexcept { return mode_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return durations_.size(); }
  bool empty() const noexcept { return durations_.empty(); }
  bool exact() const noexcept { return exact_; }
  std::size_t leaf_max() const noexcept { return leaf_max_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::vector<Tree>& forest() const noexcept { return forest_; }

  std::span<const float> vector(std::size_t i) const noexcept {
    return std::span<const float>(vectors_).subspan(i * dim_, dim_);
  }
  std::size_t duration(std::size_t i) const noexcept { return durations_[i]; }
  const Interval& source(std::size_t i) const noexcept { return sources_[i]; }

  IntervalFeature entry(std::size_t i) const {
    require(i < size(), Errc::out_of_range, "index entry out of range");
    auto v = vector(i);
    return IntervalFeature{Embedding(std::vector<float>(v.begin(), v.end())), durations_[i],
                           sources_[i], mode_};
  }

  /// Nearest entry, exact or approximate per the index setting. Ties go to the
  /// lowest insertion index.
  Match query(std::span<const float> probe) const {
    check_probe(probe);
    return exact_ ? scan_all(probe) : scan_candidates(probe);
  }

  Match query(const IntervalFeature& probe) const {
    require(probe.mode == mode_, Errc::invalid_argument,
            std::string("probe mode ") + std::string(to_string(probe.mode)) +
                " does not match index mode " + std::string(to_string(mode_)));
    return query(probe.vector.values());
  }

  Match query_exact(std::span<const float> probe) const {
    check_probe(probe);
    return scan_all(probe);
  }

  Match query_approximate(std::span<const float> probe) const {
    check_probe(probe);
    require(!forest_.empty(), Errc::invalid_argument, "index has no trees");
    return scan_candidates(probe);
  }

  /// Union of the leaves reached in every tree, sorted ascending.
  std::vector<std::uint32_t> candidates(std::span<const float> probe) const {
    std::vector<std::uint32_t> out;
    std::vector<std::int32_t> stack;
    for (const auto& tree : forest_) {
      stack.assign(1, 0);
      while (!stack.empty()) {
        const Node& node = tree[static_cast<std::size_t>(stack.back())];
        stack.pop_back();
        switch (node.kind) {
          case Node::Kind::leaf:
            out.insert(out.end(), node.items.begin(), node.items.end());
            break;
          case Node::Kind::split:
            stack.push_back(margin(node, probe) > 0.0 ? node.right : node.left);
            break;
          case Node::Kind::fork:
            stack.push_back(node.right);
            stack.push_back(node.left);
            break;
        }
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::vector<std::uint8_t> serialize() const {
    require(!empty(), Errc::invalid_argument, "refusing to save an empty index");
    binary::Writer w;
    w.bytes(kIndexMagic, 4);
    w.u32(kIndexVersion);
    w.u32(static_cast<std::uint32_t>(mode_));
    w.u32(static_cast<std::uint32_t>(dim_));
    w.u64(size());
    w.u32(static_cast<std::uint32_t>(leaf_max_));
    w.u32(static_cast<std::uint32_t>(forest_.size()));
    w.u64(seed_);
    w.u8(exact_ ? 1 : 0);
    for (std::size_t i = 0; i < size(); ++i) {
      w.str(sources_[i].demo_id);
      w.u64(sources_[i].begin);
      w.u64(sources_[i].end);
      w.u32(static_cast<std::uint32_t>(durations_[i]));
    }
    for (float x : vectors_) w.f32(x);
    for (const auto& tree : forest_) {
      w.u32(static_cast<std::uint32_t>(tree.size()));
      for (const auto& node : tree) {
        w.u8(static_cast<std::uint8_t>(node.kind));
        switch (node.kind) {
          case Node::Kind::leaf:
            w.u32(static_cast<std::uint32_t>(node.items.size()));
            for (auto it : node.items) w.u32(it);
            break;
          case Node::Kind::split:
            w.i32(node.left);
            w.i32(node.right);
            w.f32(node.offset);
            for (float x : node.normal) w.f32(x);
            break;
          case Node::Kind::fork:
            w.i32(node.left);
            w.i32(node.right);
            break;
        }
      }
    }
    return w.buffer();
  }

  void save(const std::filesystem::path& path) const {
    binary::Writer w;
    const auto bytes = serialize();
    w.bytes(bytes.data(), bytes.size());
    w.save(path);
  }

  static IntervalIndex deserialize(binary::Reader& r) {
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kIndexMagic, 4) != 0) {
      fail(Errc::format, "'" + r.origin() + "' is not an interval index (bad magic)");
    }
    const std::uint32_t version = r.u32();
    if (version != kIndexVersion) {
      fail(Errc::format, "'" + r.origin() + "': unsupported index version " +
                             std::to_string(version) + " (expected " +
                             std::to_string(kIndexVersion) + ")");
    }
    IntervalIndex idx;
    const std::uint32_t mode = r.u32();
    if (mode > 1) fail(Errc::format, "'" + r.origin() + "': unknown feature mode");
    idx.mode_ = static_cast<FeatureMode>(mode);
    idx.dim_ = r.u32();
    const std::uint64_t count = r.u64();
    idx.leaf_max_ = r.u32();
    const std::uint32_t tree_count = r.u32();
    idx.seed_ = r.u64();
    idx.exact_ = r.u8() != 0;
    if (count == 0 || idx.dim_ == 0) fail(Errc::format, "'" + r.origin() + "': empty index");
    // Every entry needs at least 24 bytes of metadata plus its vector.
    if (count > r.remaining() / (24 + 4 * idx.dim_)) {
      fail(Errc::format, "'" + r.origin() + "' is truncated");
    }
    for (std::uint64_t i = 0; i < count; ++i) {
      Interval src;
      src.demo_id = r.str();
      src.begin = r.u64();
      src.end = r.u64();
      idx.sources_.push_back(std::move(src));
      idx.durations_.push_back(r.u32());
    }
    idx.vectors_.resize(count * idx.dim_);
    for (auto& x : idx.vectors_) x = r.f32();
    for (std::uint32_t t = 0; t < tree_count; ++t) {
      Tree tree(r.u32());
      for (auto& node : tree) {
        const std::uint8_t kind = r.u8();
        if (kind > 2) fail(Errc::format, "'" + r.origin() + "': corrupt tree node");
        node.kind = static_cast<Node::Kind>(kind);
        if (node.kind == Node::Kind::leaf) {
          node.items.resize(r.u32());
          for (auto& it : node.items) {
            it = r.u32();
            if (it >= count) fail(Errc::format, "'" + r.origin() + "': corrupt leaf item");
          }
          continue;
        }
        node.left = r.i32();
        node.right = r.i32();
        if (node.left <= 0 || node.right <= 0 ||
            static_cast<std::size_t>(std::max(node.left, node.right)) >= tree.size()) {
          fail(Errc::format, "'" + r.origin() + "': corrupt tree links");
        }
        if (node.kind == Node::Kind::split) {
          node.offset = r.f32();
          node.normal.resize(idx.dim_);
          for (auto& x : node.normal) x = r.f32();
        }
      }
      idx.forest_.push_back(std::move(tree));
    }
    if (!r.at_end()) fail(Errc::format, "'" + r.origin() + "' has trailing bytes");
    return idx;
  }

  static IntervalIndex load(const std::filesystem::path& path) {
    auto r = binary::Reader::from_file(path);
    return deserialize(r);
  }

  friend bool operator==(const IntervalIndex&, const IntervalIndex&) = default;

 private:
  void check_probe(std::span<const float> probe) const {
    require(!empty(), Errc::invalid_argument, "query on an empty index");
    require(probe.size() == dim_, Errc::dimension_mismatch,
            "probe dim " + std::to_string(probe.size()) + " does not match index dim " +
                std::to_string(dim_));
  }

  static double margin(const Node& node, std::span<const float> x) noexcept {
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) m += static_cast<double>(node.normal[i]) * x[i];
    return m - node.offset;
  }

  Match scan_all(std::span<const float> probe) const {
    Match best{0, std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < size(); ++i) {
      const double d = detail::angular_distance_unchecked(probe, vector(i));
      if (d < best.distance) best = {i, d};
    }
    return best;
  }

  Match scan_candidates(std::span<const float> probe) const {
    Match best{0, std::numeric_limits<double>::infinity()};
    for (std::uint32_t i : candidates(probe)) {
      const double d = detail::angular_distance_unchecked(probe, vector(i));
      if (d < best.distance) best = {i, d};
    }
    return best;
  }

  // Random-projection tree: each split is the perpendicular bisector of two
  // randomly drawn points of the node. When no attempt separates the points
  // (duplicates), the node forks into two halves and queries visit both.
  Tree grow_tree(std::size_t tree_index) const {
    std::mt19937_64 rng(seed_ ^ (0x9E3779B97F4A7C15ULL * (tree_index + 1)));
    Tree tree;
    std::vector<std::uint32_t> all(size());
    for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
    grow(tree, std::move(all), rng);
    return tree;
  }

  // Two centroids seeded at items a and b, refined by a short online 2-means
  // pass over randomly drawn node items (distances weighted by cluster size).
  std::pair<std::vector<double>, std::vector<double>> two_means(
      const std::vector<std::uint32_t>& items, std::size_t a, std::size_t b,
      std::mt19937_64& rng) const {
    constexpr int kIterations = 200;
    const auto pa = vector(items[a]);
    const auto pb = vector(items[b]);
    std::vector<double> p(pa.begin(), pa.end());
    std::vector<double> q(pb.begin(), pb.end());
    double np = 1.0;
    double nq = 1.0;
    std::uniform_int_distribution<std::size_t> pick(0, items.size() - 1);
    for (int it = 0; it < kIterations; ++it) {
      const auto x = vector(items[pick(rng)]);
      double dp = 0.0;
      double dq = 0.0;
      for (std::size_t k = 0; k < dim_; ++k) {
        dp += (p[k] - x[k]) * (p[k] - x[k]);
        dq += (q[k] - x[k]) * (q[k] - x[k]);
      }
      if (np * dp < nq * dq) {
        for (std::size_t k = 0; k < dim_; ++k) p[k] = (p[k] * np + x[k]) / (np + 1.0);
        np += 1.0;
      } else if (nq * dq < np * dp) {
        for (std::size_t k = 0; k < dim_; ++k) q[k] = (q[k] * nq + x[k]) / (nq + 1.0);
        nq += 1.0;
      }
    }
    return {std::move(p), std::move(q)};
  }

  std::int32_t grow(Tree& tree, std::vector<std::uint32_t> items, std::mt19937_64& rng) const {
    const auto id = static_cast<std::int32_t>(tree.size());
    tree.emplace_back();
    if (items.size() <= leaf_max_) {
      tree[id].items = std::move(items);
      return id;
    }

    constexpr int kAttempts = 8;
    std::uniform_int_distribution<std::size_t> pick(0, items.size() - 1);
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
      const std::size_t a = pick(rng);
      std::size_t b = pick(rng);
      if (a == b) b = (b + 1) % items.size();
      const auto [p, q] = two_means(items, a, b, rng);
      Node split;
      split.kind = Node::Kind::split;
      split.normal.resize(dim_);
      double nn = 0.0;
      double off = 0.0;
      for (std::size_t k = 0; k < dim_; ++k) {
        split.normal[k] = static_cast<float>(p[k] - q[k]);
        nn += static_cast<double>(split.normal[k]) * split.normal[k];
        off += static_cast<double>(split.normal[k]) * (0.5 * (p[k] + q[k]));
      }
      if (nn == 0.0) continue;
      split.offset = static_cast<float>(off);
      std::vector<std::uint32_t> left, right;
      for (auto it : items) (margin(split, vector(it)) > 0.0 ? right : left).push_back(it);
      if (left.empty() || right.empty()) continue;
      items.clear();
      items.shrink_to_fit();
      const auto l = grow(tree, std::move(left), rng);
      const auto r = grow(tree, std::move(right), rng);
      split.left = l;
      split.right = r;
      tree[id] = std::move(split);
      return id;
    }

    std::vector<std::uint32_t> left(items.begin(), items.begin() + items.size() / 2);
    std::vector<std::uint32_t> right(items.begin() + items.size() / 2, items.end());
    items.clear();
    const auto l = grow(tree, std::move(left), rng);
    const auto r = grow(tree, std::move(right), rng);
    tree[id].kind = Node::Kind::fork;
    tree[id].left = l;
    tree[id].right = r;
    return id;
  }

  FeatureMode mode_ = FeatureMode::full;
  std::size_t dim_ = 0;
  std::size_t leaf_max_ = 32;
  std::uint64_t seed_ = 0;
  bool exact_ = true;
  std::vector<float> vectors_;
  std::vector<std::size_t> durations_;
  std::vector<Interval> sources_;
  std::vector<Tree> forest_;
};

inline IntervalIndex build_index(std::span<const IntervalFeature> features, std::size_t trees = 10,
                                 std::size_t leaf_max = 32, std::uint64_t seed = 0,
                                 std::optional<bool> exact = std::nullopt) {
  return IntervalIndex::build(features, IndexOptions{trees, leaf_max, seed, exact});
}

/// Features for every expert interval of `demos`, in order.
inline std::vector<IntervalFeature> reference_features(std::span<const Demonstration> demos,
                                                       std::span<const Interval> intervals,
                                                       FeatureMode mode) {
  std::vector<IntervalFeature> out;
  out.reserve(intervals.size());
  std::size_t d = 0;
  for (const auto& iv : intervals) {
    while (d < demos.size() && demos[d].id() != iv.demo_id) ++d;
    if (d == demos.size()) {
      d = 0;
      while (d < demos.size() && demos[d].id() != iv.demo_id) ++d;
      require(d < demos.size(), Errc::invalid_argument,
              "interval refers to unknown demo '" + iv.demo_id + "'");
    }
    out.push_back(feature_of(demos[d], iv, mode));
  }
  return out;
}

}  // namespace rdd
