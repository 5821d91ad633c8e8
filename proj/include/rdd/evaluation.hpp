#pragma once

// Decomposition quality (mIoU against ground truth), the uniform-split
// baseline, corpus-level evaluation and the solver runtime benchmark.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "rdd/bundle.hpp"
#include "rdd/core.hpp"
#include "rdd/interval_db.hpp"
#include "rdd/parallel.hpp"
#include "rdd/partition_solver.hpp"
#include "rdd/scoring.hpp"
#include "rdd/solver.hpp"

namespace rdd {

namespace detail {

inline double segment_iou(std::size_t b0, std::size_t e0, std::size_t b1, std::size_t e1) {
  const std::size_t lo = std::max(b0, b1);
  const std::size_t hi = std::min(e0, e1);
  const std::size_t inter = hi > lo ? hi - lo : 0;
  const std::size_t uni = (e0 - b0) + (e1 - b1) - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace detail

/// Mean IoU over ground-truth segments after greedy one-to-one matching by
/// descending IoU. Unmatched truth segments count as 0; frames left
/// uncovered by `predicted` simply never intersect anything.
inline double miou(const Partition& predicted, const std::vector<std::size_t>& truth) {
  require(!truth.empty(), Errc::invalid_argument, "miou: empty ground truth");
  std::vector<std::pair<std::size_t, std::size_t>> gt;
  std::size_t at = 0;
  for (std::size_t b : truth) {
    require(b > at, Errc::invalid_argument, "miou: truth boundaries must increase");
    gt.emplace_back(at, b);
    at = b;
  }

  struct Pair {
    double iou;
    std::size_t truth;
    std::size_t pred;
  };
  std::vector<Pair> pairs;
  for (std::size_t t = 0; t < gt.size(); ++t) {
    for (std::size_t p = 0; p < predicted.intervals.size(); ++p) {
      const auto& iv = predicted.intervals[p];
      const double v = detail::segment_iou(gt[t].first, gt[t].second, iv.begin, iv.end);
      if (v > 0.0) pairs.push_back({v, t, p});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(b.iou, a.truth, a.pred) < std::tie(a.iou, b.truth, b.pred);
  });

  std::vector<double> matched(gt.size(), 0.0);
  std::vector<bool> truth_used(gt.size(), false);
  std::vector<bool> pred_used(predicted.intervals.size(), false);
  for (const auto& pr : pairs) {
    if (truth_used[pr.truth] || pred_used[pr.pred]) continue;
    truth_used[pr.truth] = pred_used[pr.pred] = true;
    matched[pr.truth] = pr.iou;
  }
  double sum = 0.0;
  for (double v : matched) sum += v;
  return sum / static_cast<double>(gt.size());
}

/// k near-equal intervals; the first (length % k) intervals get one extra frame.
inline Partition uniform_baseline(std::size_t length, std::size_t k, const std::string& demo_id = {}) {
  require(k >= 1, Errc::invalid_argument, "uniform_baseline: k must be >= 1");
  require(k <= length / 2, Errc::invalid_argument,
          "uniform_baseline: k = " + std::to_string(k) + " too large for " +
              std::to_string(length) + " frames");
  Partition p;
  const std::size_t base = length / k;
  const std::size_t extra = length % k;
  std::size_t at = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t len = base + (i < extra ? 1 : 0);
    p.intervals.push_back(Interval{demo_id, at, at + len});
    at += len;
  }
  p.covered_prefix = at;
  return p;
}

inline Partition uniform_baseline(const Demonstration& demo, std::size_t k) {
  return uniform_baseline(demo.length(), k, demo.id());
}

struct EvalReport {
  double miou = 0.0;
  std::vector<double> per_demo_iou;
  double baseline_miou = 0.0;               // uniform split, k = true segment count
  std::vector<double> per_demo_baseline_iou;
  double mean_novelty = 0.0;
  std::vector<double> novelties;
  std::vector<std::size_t> eval_counts;
  std::vector<double> wall_times_ms;
  std::vector<std::string> demo_ids;
  std::vector<DecompositionResult> results;
};

struct EvalOptions {
  ScoreParams params;
  SolverConfig solver;
  IndexOptions index;
  unsigned threads = 1;  // demos decomposed concurrently
};

/// Builds the index from the reference demos' expert intervals, decomposes
/// every test demo and scores it against its ground truth.
inline EvalReport run_eval(std::span<const Demonstration> reference,
                           std::span<const Demonstration> test, const EvalOptions& opts) {
  require(!reference.empty(), Errc::invalid_argument, "run_eval: empty reference set");
  require(!test.empty(), Errc::invalid_argument, "run_eval: empty test set");
  const std::size_t dim = reference.front().dim();
  for (const auto& d : test) {
    require(d.dim() == dim, Errc::dimension_mismatch,
            "test demo '" + d.id() + "' has dim " + std::to_string(d.dim()) +
                ", reference has " + std::to_string(dim));
    require(d.has_boundaries(), Errc::invalid_data,
            "test demo '" + d.id() + "' lacks ground-truth boundaries");
  }
  const auto intervals = reference_intervals(reference);
  const auto features = reference_features(reference, intervals, feature_mode_for(opts.params.mode));
  const IntervalIndex index = IntervalIndex::build(features, opts.index);

  EvalReport rep;
  const std::size_t n = test.size();
  rep.results.resize(n);
  rep.per_demo_iou.resize(n);
  rep.per_demo_baseline_iou.resize(n);
  rep.novelties.resize(n);
  rep.eval_counts.resize(n);
  rep.wall_times_ms.resize(n);
  parallel_chunks(n, 1, resolve_threads(opts.threads), [&](std::size_t from, std::size_t to) {
    for (std::size_t i = from; i < to; ++i) {
      const auto& demo = test[i];
      const auto t0 = std::chrono::steady_clock::now();
      auto result = max_sum_partition(demo, index, opts.params, opts.solver);
      const auto t1 = std::chrono::steady_clock::now();
      const auto& truth = *demo.boundaries();
      rep.per_demo_iou[i] = miou(result.partition, truth);
      const std::size_t k = std::min(truth.size(), demo.length() / 2);
      rep.per_demo_baseline_iou[i] = miou(uniform_baseline(demo, k), truth);
      rep.novelties[i] = result.novelty;
      rep.eval_counts[i] = result.eval_count;
      rep.wall_times_ms[i] = std::chrono::duration<double, std::milli>(t1 - t0).count();
      rep.results[i] = std::move(result);
    }
  });
  for (const auto& d : test) rep.demo_ids.push_back(d.id());

  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  rep.miou = mean(rep.per_demo_iou);
  rep.baseline_miou = mean(rep.per_demo_baseline_iou);
  rep.mean_novelty = mean(rep.novelties);
  return rep;
}

inline nlohmann::ordered_json report_json(const EvalReport& rep, bool include_timing = true) {
  nlohmann::ordered_json j;
  j["miou"] = rep.miou;
  j["baseline_miou"] = rep.baseline_miou;
  j["mean_novelty"] = rep.mean_novelty;
  nlohmann::ordered_json demos = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < rep.demo_ids.size(); ++i) {
    nlohmann::ordered_json d;
    d["demo_id"] = rep.demo_ids[i];
    d["iou"] = rep.per_demo_iou[i];
    d["baseline_iou"] = rep.per_demo_baseline_iou[i];
    d["novelty"] = rep.novelties[i];
    d["eval_count"] = rep.eval_counts[i];
    d["boundaries"] = rep.results[i].partition.boundaries();
    if (include_timing) d["wall_ms"] = rep.wall_times_ms[i];
    demos.push_back(std::move(d));
  }
  j["demos"] = std::move(demos);
  return j;
}

inline void write_report_csv(const std::filesystem::path& path, const EvalReport& rep) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::io, "cannot write '" + path.string() + "'");
  out << "demo_id,iou,baseline_iou,novelty,eval_count,wall_ms\n";
  out.precision(17);
  for (std::size_t i = 0; i < rep.demo_ids.size(); ++i) {
    out << rep.demo_ids[i] << ',' << rep.per_demo_iou[i] << ',' << rep.per_demo_baseline_iou[i]
        << ',' << rep.novelties[i] << ',' << rep.eval_counts[i] << ',' << rep.wall_times_ms[i]
        << '\n';
  }
  if (!out) fail(Errc::io, "write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Runtime benchmark

/// O(1) deterministic segment score for timing the DP alone.
inline double stub_segment_score(std::size_t begin, std::size_t end) noexcept {
  std::uint64_t h = (static_cast<std::uint64_t>(begin) * 0x9E3779B97F4A7C15ULL) ^
                    (static_cast<std::uint64_t>(end) * 0xC2B2AE3D27D4EB4FULL);
  h ^= h >> 29;
  return -static_cast<double>(h & 0xFFFF) / 65536.0;
}

struct BenchRow {
  std::size_t n = 0;
  std::string l_max_mode;  // "bounded" or "unbounded"
  double wall_ms = 0.0;    // fastest of the repetitions
  std::size_t eval_count = 0;
};

/// Times the DP with stub scoring for each n, with l_max bounded and
/// unbounded. Repetitions run round-robin over the lengths so that a slow
/// stretch on a shared machine hits every size alike; each row keeps the
/// fastest repetition. The round count aims at about `work_per_row` segment
/// evaluations per row.
inline std::vector<BenchRow> bench_runtime(const std::vector<std::size_t>& lengths,
                                           std::size_t l_max,
                                           std::uint64_t work_per_row = 40'000'000) {
  std::vector<BenchRow> rows;
  for (const bool bounded : {true, false}) {
    SolverConfig cfg;
    cfg.l_min = 2;
    if (bounded) cfg.l_max = l_max;
    std::uint64_t round_evals = 0;
    for (std::size_t n : lengths) round_evals += expected_evaluations(n, cfg);
    const std::uint64_t per_row = std::max<std::uint64_t>(1, round_evals / std::max<std::size_t>(1, lengths.size()));
    const std::size_t rounds =
        static_cast<std::size_t>(std::clamp<std::uint64_t>(work_per_row / per_row, 5, 500));
    const std::size_t first = rows.size();
    for (std::size_t n : lengths) {
      rows.push_back({n, bounded ? "bounded" : "unbounded",
                      std::numeric_limits<double>::infinity(), 0});
    }
    for (std::size_t r = 0; r < rounds; ++r) {
      for (std::size_t k = 0; k < lengths.size(); ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto sol = solve_max_sum_partition(lengths[k], stub_segment_score, cfg);
        const auto t1 = std::chrono::steady_clock::now();
        auto& row = rows[first + k];
        row.wall_ms = std::min(row.wall_ms, std::chrono::duration<double, std::milli>(t1 - t0).count());
        row.eval_count = sol.eval_count;
      }
    }
  }
  return rows;
}

inline void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "n,l_max_mode,wall_ms,eval_count\n";
  for (const auto& r : rows) {
    out << r.n << ',' << r.l_max_mode << ',' << r.wall_ms << ',' << r.eval_count << '\n';
  }
}

}  // namespace rdd
