#pragma once

// Shared domain types and the angular distance used everywhere else.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rdd/error.hpp"

namespace rdd {

/// Tolerance on |norm - 1| under which a vector counts as normalized.
inline constexpr double kNormTolerance = 1e-6;

namespace detail {

struct DotNorms {
  double dot = 0.0;
  double uu = 0.0;
  double vv = 0.0;
};

inline DotNorms dot_norms(std::span<const float> u, std::span<const float> v) noexcept {
  DotNorms r;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = u[i];
    const double b = v[i];
    r.dot += a * b;
    r.uu += a * a;
    r.vv += b * b;
  }
  return r;
}

inline double squared_norm(std::span<const float> u) noexcept {
  double s = 0.0;
  for (float x : u) s += static_cast<double>(x) * x;
  return s;
}

// Unchecked angular distance. Cosine is taken against the measured norms so
// that bitwise-identical inputs give exactly zero even when float rounding
// leaves the norm a few ulps away from one.
inline double angular_distance_unchecked(std::span<const float> u,
                                         std::span<const float> v) noexcept {
  const DotNorms r = dot_norms(u, v);
  double c = r.dot / std::sqrt(r.uu * r.vv);
  c = std::clamp(c, -1.0, 1.0);
  return std::clamp(std::sqrt(2.0 * (1.0 - c)), 0.0, 2.0);
}

}  // namespace detail

/// A single embedding vector. Stored as float, distances accumulate in double.
class Embedding {
 public:
  Embedding() = default;
  explicit Embedding(std::vector<float> values) : values_(std::move(values)) {
    require(!values_.empty(), Errc::invalid_argument, "embedding must have dim >= 1");
  }
  Embedding(std::initializer_list<float> values) : Embedding(std::vector<float>(values)) {}

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const float> values() const noexcept { return values_; }
  const std::vector<float>& data() const noexcept { return values_; }

  double norm() const noexcept { return std::sqrt(detail::squared_norm(values_)); }
  bool normalized() const noexcept { return std::abs(norm() - 1.0) <= kNormTolerance; }

  float operator[](std::size_t i) const noexcept { return values_[i]; }

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  std::vector<float> values_;
};

/// Scales `values` to unit length in place. Vectors already within
/// kNormTolerance of unit length are left untouched, which keeps the
/// operation idempotent bit for bit.
inline void normalize_in_place(std::span<float> values) {
  const double n2 = detail::squared_norm(values);
  require(n2 > 0.0 && std::isfinite(n2), Errc::invalid_argument,
          "cannot normalize a zero-norm (or non-finite) vector");
  const double n = std::sqrt(n2);
  if (std::abs(n - 1.0) <= kNormTolerance) return;
  for (float& x : values) x = static_cast<float>(x / n);
}

inline Embedding normalize(const Embedding& u) {
  std::vector<float> v(u.values().begin(), u.values().end());
  normalize_in_place(v);
  return Embedding(std::move(v));
}

/// sqrt(2 (1 - cos(u, v))), clamped into [0, 2].
inline double angular_distance(std::span<const float> u, std::span<const float> v) {
  require(u.size() == v.size(), Errc::dimension_mismatch,
          "angular_distance: dimension mismatch (" + std::to_string(u.size()) + " vs " +
              std::to_string(v.size()) + ")");
  require(!u.empty(), Errc::invalid_argument, "angular_distance: empty vectors");
  const detail::DotNorms r = detail::dot_norms(u, v);
  require(r.uu > 0.0 && r.vv > 0.0, Errc::invalid_argument,
          "angular_distance: zero-norm input");
  const double c = std::clamp(r.dot / std::sqrt(r.uu * r.vv), -1.0, 1.0);
  return std::clamp(std::sqrt(2.0 * (1.0 - c)), 0.0, 2.0);
}

inline double angular_distance(const Embedding& u, const Embedding& v) {
  return angular_distance(u.values(), v.values());
}

/// Half-open frame range [begin, end) of one demonstration.
struct Interval {
  std::string demo_id;
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t duration() const noexcept { return end - begin; }
  /// Closed-index form (first frame, last frame).
  std::pair<std::size_t, std::size_t> closed() const noexcept { return {begin, end - 1}; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// A demonstration: `length` frames of `dim`-dimensional embeddings, stored
/// row-major, plus optional expert sub-task boundaries (segment end indices).
class Demonstration {
 public:
  Demonstration(std::string id, std::size_t dim, std::vector<float> frames,
                std::optional<std::vector<std::size_t>> boundaries = std::nullopt)
      : id_(std::move(id)), dim_(dim), frames_(std::move(frames)),
        boundaries_(std::move(boundaries)) {
    require(dim_ >= 1, Errc::invalid_data, "demo '" + id_ + "': dim must be >= 1");
    require(frames_.size() % dim_ == 0, Errc::invalid_data,
            "demo '" + id_ + "': frame data is not a multiple of dim");
    require(length() >= 2, Errc::invalid_data,
            "demo '" + id_ + "': needs at least 2 frames, has " + std::to_string(length()));
    if (boundaries_) validate_boundaries(id_, *boundaries_, length());
  }

  static void validate_boundaries(const std::string& id, const std::vector<std::size_t>& b,
                                  std::size_t length) {
    require(!b.empty(), Errc::invalid_data, "demo '" + id + "': boundaries list is empty");
    require(b.front() > 0, Errc::invalid_data,
            "demo '" + id + "': first boundary must be > 0");
    for (std::size_t k = 1; k < b.size(); ++k) {
      require(b[k] > b[k - 1], Errc::invalid_data,
              "demo '" + id + "': boundaries must be strictly increasing");
    }
    require(b.back() == length, Errc::invalid_data,
            "demo '" + id + "': boundaries must end at frame_count (" + std::to_string(length) +
                "), last is " + std::to_string(b.back()));
  }

  const std::string& id() const noexcept { return id_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t length() const noexcept { return frames_.size() / dim_; }
  std::span<const float> frame(std::size_t k) const noexcept {
    return std::span<const float>(frames_).subspan(k * dim_, dim_);
  }
  const std::vector<float>& frames() const noexcept { return frames_; }
  const std::optional<std::vector<std::size_t>>& boundaries() const noexcept {
    return boundaries_;
  }
  bool has_boundaries() const noexcept { return boundaries_.has_value(); }

  Interval interval(std::size_t begin, std::size_t end) const {
    require(begin < end && end <= length(), Errc::out_of_range,
            "interval [" + std::to_string(begin) + ", " + std::to_string(end) +
                ") outside demo '" + id_ + "' of length " + std::to_string(length()));
    return Interval{id_, begin, end};
  }

  friend bool operator==(const Demonstration&, const Demonstration&) = default;

 private:
  std::string id_;
  std::size_t dim_;
  std::vector<float> frames_;
  std::optional<std::vector<std::size_t>> boundaries_;
};

/// Intervals in frame order. Normally consecutive from frame 0; the solver's
/// carry-forward fallback can leave gaps (see consecutive()).
struct Partition {
  std::vector<Interval> intervals;
  std::size_t covered_prefix = 0;  // end of the last interval

  bool consecutive() const noexcept {
    std::size_t at = 0;
    for (const auto& iv : intervals) {
      if (iv.begin != at || iv.end <= iv.begin) return false;
      at = iv.end;
    }
    return at == covered_prefix;
  }

  std::vector<std::size_t> boundaries() const {
    std::vector<std::size_t> b;
    b.reserve(intervals.size());
    for (const auto& iv : intervals) b.push_back(iv.end);
    return b;
  }
};

/// The reference entry an interval was scored against.
struct NeighborRef {
  std::size_t entry = 0;
  double distance = 0.0;
  Interval source;
};

struct DecompositionResult {
  Partition partition;
  std::vector<double> interval_scores;
  std::vector<NeighborRef> neighbors;  // parallel to interval_scores when available
  double total_score = 0.0;
  double novelty = 0.0;
  bool full_coverage = true;
  std::size_t eval_count = 0;
};

}  // namespace rdd
