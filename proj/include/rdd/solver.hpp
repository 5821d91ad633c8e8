#pragma once

// Retrieval-backed decomposition of one demonstration.

#include <cstddef>
#include <optional>

#include "rdd/core.hpp"
#include "rdd/interval_db.hpp"
#include "rdd/partition_solver.hpp"
#include "rdd/scoring.hpp"

namespace rdd {

/// score_interval when l_min <= |segment| <= l_max, infeasible otherwise.
inline Score adapted_score(const Interval& segment, const ScoreParams& params,
                           const IntervalIndex& index, const Demonstration& demo) {
  if (!params.admits(segment.duration())) return Score::infeasible();
  return Score(score_interval(demo, segment, index, params).score);
}

/// Optimal decomposition of `demo`. Length bounds come from `config`; the
/// bounds in `params` are ignored.
inline DecompositionResult max_sum_partition(const Demonstration& demo, const IntervalIndex& index,
                                             ScoreParams params, const SolverConfig& config) {
  config.validate();
  params.l_min = config.l_min;
  params.l_max = config.l_max;
  params.validate();
  require(!index.empty(), Errc::invalid_argument, "cannot decompose against an empty index");
  const FeatureMode mode = feature_mode_for(params.mode);
  require(index.mode() == mode, Errc::invalid_argument,
          std::string(to_string(params.mode)) + " scoring needs a " +
              std::string(to_string(mode)) + " index");
  const std::size_t expected_dim = mode == FeatureMode::full ? 2 * demo.dim() : demo.dim();
  require(index.dim() == expected_dim, Errc::dimension_mismatch,
          "index dim " + std::to_string(index.dim()) + " does not fit demo '" + demo.id() +
              "' of dim " + std::to_string(demo.dim()) + " in " + std::string(to_string(mode)) +
              " mode");

  const auto score = [&](std::size_t begin, std::size_t end) {
    return score_interval(demo, Interval{demo.id(), begin, end}, index, params).score;
  };
  const PartitionSolution sol = solve_max_sum_partition(demo.length(), score, config);

  DecompositionResult out;
  out.eval_count = sol.eval_count;
  out.full_coverage = sol.full_coverage;
  out.partition.covered_prefix = sol.covered_prefix;
  out.interval_scores = sol.scores;
  std::vector<float> probe;
  for (const auto& s : sol.segments) {
    out.partition.intervals.push_back(Interval{demo.id(), s.begin, s.end});
    write_feature(demo, s.begin, s.end, mode, probe);
    const Match m = index.query(probe);
    out.neighbors.push_back(NeighborRef{m.entry, m.distance, index.source(m.entry)});
  }
  out.total_score = sol.total.feasible() ? sol.total.value() : 0.0;
  out.novelty = out.interval_scores.empty() ? 0.0 : novelty(out.interval_scores);
  return out;
}

}  // namespace rdd
