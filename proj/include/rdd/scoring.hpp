#pragma once

// Interval similarity, the retrieval-backed interval score, the change-point
// heuristic G and the novelty score.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rdd/core.hpp"
#include "rdd/error.hpp"
#include "rdd/interval_db.hpp"

namespace rdd {

enum class ScoreMode { base, ood };

inline std::string_view to_string(ScoreMode m) { return m == ScoreMode::base ? "base" : "ood"; }

/// Index feature mode that a scoring mode retrieves against.
inline FeatureMode feature_mode_for(ScoreMode m) {
  return m == ScoreMode::base ? FeatureMode::full : FeatureMode::end_only;
}

struct ScoreParams {
  double alpha = 1.0;        // weight of the relative-duration term (base mode)
  double beta = 0.0;         // weight of G (ood mode)
  ScoreMode mode = ScoreMode::base;
  double uvd_slack = 1e-3;   // additive slack on the goal-distance monotonicity test
  std::size_t l_min = 2;
  std::optional<std::size_t> l_max;

  void validate() const {
    require(alpha >= 0.0 && std::isfinite(alpha), Errc::invalid_argument, "alpha must be >= 0");
    require(beta >= 0.0 && std::isfinite(beta), Errc::invalid_argument, "beta must be >= 0");
    require(uvd_slack >= 0.0, Errc::invalid_argument, "uvd_slack must be >= 0");
    require(l_min >= 2, Errc::invalid_argument, "l_min must be >= 2");
    require(!l_max || *l_max >= l_min, Errc::invalid_argument, "l_max must be >= l_min");
  }

  bool admits(std::size_t duration) const noexcept {
    return duration >= l_min && (!l_max || duration <= *l_max);
  }
};

/// -[distance + alpha |1 - probe_duration / neighbor_duration|]
inline double sim_base(double distance, std::size_t probe_duration,
                       std::size_t neighbor_duration, double alpha) {
  require(neighbor_duration > 0, Errc::invalid_argument, "neighbor duration must be > 0");
  const double ratio = static_cast<double>(probe_duration) / static_cast<double>(neighbor_duration);
  return -(distance + alpha * std::abs(1.0 - ratio));
}

inline double sim_base(const IntervalFeature& probe, const IntervalFeature& neighbor,
                       double alpha) {
  require(probe.mode == FeatureMode::full && neighbor.mode == FeatureMode::full,
          Errc::invalid_argument, "sim_base needs full-mode features");
  return sim_base(angular_distance(probe.vector, neighbor.vector), probe.duration,
                  neighbor.duration, alpha);
}

/// -distance + beta * g_value
inline double sim_ood(double distance, double g_value, double beta) {
  return -distance + beta * g_value;
}

inline double sim_ood(const IntervalFeature& probe, const IntervalFeature& neighbor,
                      double g_value, double beta) {
  require(probe.mode == FeatureMode::end_only && neighbor.mode == FeatureMode::end_only,
          Errc::invalid_argument, "sim_ood needs end_only features");
  return sim_ood(angular_distance(probe.vector, neighbor.vector), g_value, beta);
}

/// Change-point surrogate: walks back from the goal frame (end - 1) while the
/// distance-to-goal series stays non-increasing (within `slack`) toward the
/// goal, and returns the earliest frame reached, never below `search_floor`.
inline std::size_t uvd_predict_begin(const Demonstration& demo, std::size_t end,
                                     std::size_t search_floor, double slack) {
  require(end >= 1 && end <= demo.length(), Errc::out_of_range,
          "goal end " + std::to_string(end) + " outside demo '" + demo.id() + "'");
  require(search_floor <= end - 1, Errc::out_of_range, "search_floor beyond goal frame");
  const std::size_t goal = end - 1;
  const auto goal_frame = demo.frame(goal);
  std::size_t t = goal;
  double d_t = 0.0;  // distance of frame t to the goal
  while (t > search_floor) {
    const double d_prev = detail::angular_distance_unchecked(demo.frame(t - 1), goal_frame);
    if (d_t > d_prev + slack) break;
    --t;
    d_t = d_prev;
  }
  return t;
}

/// G(I) = -|b - predicted_begin| / |I|, with the scan floored at frame 0.
inline double g_score(const Demonstration& demo, const Interval& interval, double slack) {
  require(interval.begin < interval.end && interval.end <= demo.length(), Errc::out_of_range,
          "interval outside demo '" + demo.id() + "'");
  const std::size_t predicted = uvd_predict_begin(demo, interval.end, 0, slack);
  const double off = std::abs(static_cast<double>(interval.begin) - static_cast<double>(predicted));
  return -off / static_cast<double>(interval.duration());
}

/// J(I) = |I| * sim. Linear in duration, so for a similarity that is constant
/// over sub-intervals the score of a whole equals the sum over its pieces.
inline double weighted_score(std::size_t duration, double sim) noexcept {
  return static_cast<double>(duration) * sim;
}

struct IntervalScore {
  double score = 0.0;
  Match neighbor;
};

/// |I| * sim(I, nearest reference of I).
inline IntervalScore score_interval(const Demonstration& demo, const Interval& interval,
                                    const IntervalIndex& index, const ScoreParams& params) {
  require(!index.empty(), Errc::invalid_argument, "cannot score against an empty index");
  require(interval.begin < interval.end && interval.end <= demo.length(), Errc::out_of_range,
          "interval [" + std::to_string(interval.begin) + ", " + std::to_string(interval.end) +
              ") outside demo '" + demo.id() + "'");
  const std::size_t duration = interval.duration();
  require(params.admits(duration), Errc::invalid_argument,
          "interval length " + std::to_string(duration) + " outside [l_min, l_max]");
  const FeatureMode mode = feature_mode_for(params.mode);
  require(index.mode() == mode, Errc::invalid_argument,
          std::string(to_string(params.mode)) + " scoring needs a " +
              std::string(to_string(mode)) + " index");

  std::vector<float> probe;
  write_feature(demo, interval.begin, interval.end, mode, probe);
  const Match m = index.query(probe);
  if (params.mode == ScoreMode::base) {
    return {weighted_score(duration, sim_base(m.distance, duration, index.duration(m.entry),
                                              params.alpha)),
            m};
  }
  const double g = params.beta == 0.0 ? 0.0 : g_score(demo, interval, params.uvd_slack);
  return {weighted_score(duration, sim_ood(m.distance, g, params.beta)), m};
}

/// Mean interval score.
inline double novelty(std::span<const double> interval_scores) {
  require(!interval_scores.empty(), Errc::invalid_argument, "novelty of an empty partition");
  double s = 0.0;
  for (double x : interval_scores) s += x;
  return s / static_cast<double>(interval_scores.size());
}

inline double novelty(const DecompositionResult& result) { return novelty(result.interval_scores); }

/// Diagnostic: total score per covered frame. Not the mean-per-interval novelty.
inline double novelty_per_frame(const DecompositionResult& result) {
  require(result.partition.covered_prefix > 0, Errc::invalid_argument,
          "novelty_per_frame of an empty partition");
  return result.total_score / static_cast<double>(result.partition.covered_prefix);
}

}  // namespace rdd
