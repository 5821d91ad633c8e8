#pragma once

// Maximum-sum partition of a sequence [0, n) into consecutive segments whose
// lengths lie in [l_min, l_max], for any additive segment score.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rdd/error.hpp"
#include "rdd/parallel.hpp"

namespace rdd {

/// A real score or the infeasible value (-inf). Infeasible absorbs addition
/// and compares below every feasible score.
class Score {
 public:
  constexpr Score() noexcept = default;  // infeasible
  constexpr explicit Score(double v) noexcept : value_(v), feasible_(true) {}

  static constexpr Score infeasible() noexcept { return Score(); }

  constexpr bool feasible() const noexcept { return feasible_; }
  double value() const {
    require(feasible_, Errc::infeasible, "infeasible score has no value");
    return value_;
  }

  friend constexpr Score operator+(Score a, Score b) noexcept {
    return (a.feasible_ && b.feasible_) ? Score(a.value_ + b.value_) : Score();
  }

  friend constexpr bool operator==(Score a, Score b) noexcept {
    return a.feasible_ == b.feasible_ && (!a.feasible_ || a.value_ == b.value_);
  }
  friend constexpr std::partial_ordering operator<=>(Score a, Score b) noexcept {
    if (!a.feasible_ || !b.feasible_) return a.feasible_ <=> b.feasible_;
    return a.value_ <=> b.value_;
  }

 private:
  double value_ = 0.0;
  bool feasible_ = false;
};

/// Where the DP's outer loop over segment ends starts. Starting one past
/// l_min never admits a first segment of exactly l_min frames; min_length
/// fixes that at the cost of one extra evaluation.
enum class LoopStart { min_length, after_min_length };

/// What dp[i] holds when no segment can end exactly at i.
///   carry_forward:  dp[i] = dp[i-1]; later segments may then leave frames
///                   uncovered.
///   longest_prefix: dp[i] stays infeasible; if [0, n) has no exact cover the
///                   result is the best cover of the longest coverable prefix.
enum class Fallback { carry_forward, longest_prefix };

struct SolverConfig {
  std::size_t l_min = 2;
  std::optional<std::size_t> l_max;
  bool strict_cover = false;
  bool parallel_scoring = false;
  unsigned threads = 1;
  LoopStart loop_start = LoopStart::min_length;
  Fallback fallback = Fallback::carry_forward;

  void validate() const {
    require(l_min >= 1, Errc::invalid_argument, "l_min must be >= 1");
    require(!l_max || *l_max >= l_min, Errc::invalid_argument, "l_max must be >= l_min");
  }
};

/// Candidate scores are computed in batches of this many segments when
/// scoring ahead of the DP pass.
inline constexpr std::size_t kScoringChunk = 1024;

struct Segment {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const Segment&, const Segment&) = default;
};

struct PartitionSolution {
  Score total;
  std::vector<Segment> segments;
  std::vector<double> scores;
  std::size_t covered_prefix = 0;
  bool full_coverage = false;
  std::size_t eval_count = 0;
};

/// Closed-form number of segment evaluations made with the outer loop
/// starting at l_min + 1 for n >= l_max:
///   (D + 3) D / 2 + (n - l_max)(D + 1),  D = l_max - l_min.
inline std::uint64_t count_evaluations(std::uint64_t n, std::uint64_t l_min, std::uint64_t l_max) {
  require(l_min >= 1, Errc::invalid_argument, "count_evaluations: l_min must be >= 1");
  require(l_min <= l_max, Errc::invalid_argument, "count_evaluations: l_min > l_max");
  require(l_max <= n, Errc::invalid_argument, "count_evaluations: l_max > n");
  const std::uint64_t d = l_max - l_min;
  return (d + 3) * d / 2 + (n - l_max) * (d + 1);
}

/// Same count for either loop start. The l_min start adds exactly the
/// segment [0, l_min).
inline std::uint64_t count_evaluations(std::uint64_t n, std::uint64_t l_min, std::uint64_t l_max,
                                       LoopStart start) {
  return count_evaluations(n, l_min, l_max) + (start == LoopStart::min_length ? 1 : 0);
}

/// Evaluations the solver performs for a length-n sequence under `config`.
/// Segments longer than n never occur, so an absent or oversized l_max acts
/// as l_max = n.
inline std::uint64_t expected_evaluations(std::size_t n, const SolverConfig& config) {
  config.validate();
  if (n < config.l_min) return 0;
  const std::size_t l_max = std::min(config.l_max.value_or(n), n);
  return count_evaluations(n, config.l_min, l_max, config.loop_start);
}

namespace detail {

struct CandidateLayout {
  std::size_t first_end = 0;          // first i visited by the outer loop
  std::vector<std::size_t> offset;    // offset[i - first_end]: first slot of end i
  std::size_t total = 0;

  std::size_t lowest_begin(std::size_t i, std::size_t l_max) const noexcept {
    return i > l_max ? i - l_max : 0;
  }
};

inline CandidateLayout layout_candidates(std::size_t n, std::size_t l_min, std::size_t l_max,
                                         std::size_t first_end) {
  CandidateLayout lay;
  lay.first_end = first_end;
  for (std::size_t i = first_end; i <= n; ++i) {
    lay.offset.push_back(lay.total);
    lay.total += i - l_min - lay.lowest_begin(i, l_max) + 1;
  }
  lay.offset.push_back(lay.total);
  return lay;
}

}  // namespace detail

/// Solves max over partitions of the sum of segment scores.
///
/// `score(begin, end)` must return a finite double and is called once per
/// candidate segment [begin, end) with l_min <= end - begin <= l_max. Ties go
/// to the smallest split point. When [0, n) has no exact cover, full_coverage
/// is false and the partition follows config.fallback. strict_cover restricts
/// the search to exact covers and errors (Errc::infeasible) if there is none.
template <class ScoreFn>
PartitionSolution solve_max_sum_partition(std::size_t n, ScoreFn&& score,
                                          const SolverConfig& config) {
  config.validate();
  require(n >= config.l_min, Errc::invalid_argument,
          "sequence of length " + std::to_string(n) + " is shorter than l_min = " +
              std::to_string(config.l_min));
  const std::size_t l_min = config.l_min;
  const std::size_t l_max = std::min(config.l_max.value_or(n), n);
  const std::size_t first_end = config.loop_start == LoopStart::min_length ? l_min : l_min + 1;
  // strict_cover only ever returns exact covers, so it never carries.
  const bool carry = config.fallback == Fallback::carry_forward && !config.strict_cover;

  std::vector<Score> dp(n + 1);
  std::vector<std::size_t> back(n + 1, 0);
  std::vector<double> last(n + 1, 0.0);
  std::vector<char> carried(n + 1, 0);  // dp[i] copied from dp[i-1]
  std::vector<char> coverable(n + 1, 0);
  dp[0] = Score(0.0);
  coverable[0] = 1;

  PartitionSolution sol;

  std::vector<double> table;
  detail::CandidateLayout lay;
  if (config.parallel_scoring) {
    lay = detail::layout_candidates(n, l_min, l_max, first_end);
    table.resize(lay.total);
    const unsigned threads = resolve_threads(config.threads);
    parallel_chunks(lay.total, kScoringChunk, threads, [&](std::size_t from, std::size_t to) {
      // Locate the end index owning slot `from`, then walk forward.
      std::size_t k = static_cast<std::size_t>(
          std::upper_bound(lay.offset.begin(), lay.offset.end(), from) - lay.offset.begin() - 1);
      for (std::size_t slot = from; slot < to; ++slot) {
        while (slot >= lay.offset[k + 1]) ++k;
        const std::size_t i = first_end + k;
        const std::size_t j = lay.lowest_begin(i, l_max) + (slot - lay.offset[k]);
        table[slot] = score(j, i);
      }
    });
    sol.eval_count = lay.total;
  }

  for (std::size_t i = first_end; i <= n; ++i) {
    Score best;
    std::size_t best_j = 0;
    double best_s = 0.0;
    const std::size_t lo = i > l_max ? i - l_max : 0;
    for (std::size_t j = lo; j + l_min <= i; ++j) {
      double s;
      if (config.parallel_scoring) {
        s = table[lay.offset[i - first_end] + (j - lo)];
      } else {
        s = score(j, i);
        ++sol.eval_count;
      }
      coverable[i] = coverable[i] || coverable[j];
      const Score cand = dp[j] + Score(s);
      if (cand > best) {
        best = cand;
        best_j = j;
        best_s = s;
      }
    }
    if (best.feasible()) {
      dp[i] = best;
      back[i] = best_j;
      last[i] = best_s;
    } else if (carry && dp[i - 1].feasible()) {
      dp[i] = dp[i - 1];
      carried[i] = 1;
    }
  }

  if (!coverable[n] && config.strict_cover) {
    fail(Errc::infeasible, "no partition of " + std::to_string(n) +
                               " frames into segments of length [" + std::to_string(l_min) +
                               ", " + std::to_string(l_max) + "]");
  }
  std::size_t end = n;
  while (end > 0 && (!dp[end].feasible() || carried[end])) --end;
  sol.total = dp[end];
  sol.covered_prefix = end;
  for (std::size_t at = end; at > 0;) {
    if (carried[at]) {
      --at;
      continue;
    }
    sol.segments.push_back({back[at], at});
    sol.scores.push_back(last[at]);
    at = back[at];
  }
  std::reverse(sol.segments.begin(), sol.segments.end());
  std::reverse(sol.scores.begin(), sol.scores.end());
  sol.full_coverage = end == n;
  for (std::size_t k = 0; k < sol.segments.size(); ++k) {
    const std::size_t expect = k == 0 ? 0 : sol.segments[k - 1].end;
    if (sol.segments[k].begin != expect) sol.full_coverage = false;
  }
  return sol;
}

/// Dense table of scores for every segment [begin, end) of a length-n sequence.
class SegmentScores {
 public:
  explicit SegmentScores(std::size_t n) : n_(n), values_((n + 1) * (n + 1), 0.0) {}

  std::size_t size() const noexcept { return n_; }
  double& at(std::size_t begin, std::size_t end) { return values_[begin * (n_ + 1) + end]; }
  double operator()(std::size_t begin, std::size_t end) const {
    return values_[begin * (n_ + 1) + end];
  }

 private:
  std::size_t n_;
  std::vector<double> values_;
};

inline constexpr std::size_t kBruteForceMaxLength = 20;

struct BruteForceResult {
  Score total;
  std::vector<Segment> segments;
};

/// Exhaustive search over all 2^(n-1) compositions of n. Segments outside
/// [l_min, l_max] make a composition infeasible. Among equal totals the one
/// whose segment starts, read from the last segment backwards, are
/// lexicographically smallest wins (the DP's smallest-split rule).
template <class ScoreFn>
BruteForceResult brute_force_partition(std::size_t n, ScoreFn&& score, std::size_t l_min,
                                       std::optional<std::size_t> l_max) {
  require(n >= 1, Errc::invalid_argument, "brute_force_partition: n must be >= 1");
  require(n <= kBruteForceMaxLength, Errc::invalid_argument,
          "brute_force_partition: n = " + std::to_string(n) + " exceeds " +
              std::to_string(kBruteForceMaxLength));
  const std::size_t hi = l_max.value_or(n);

  BruteForceResult best;
  std::vector<std::size_t> best_starts;
  std::vector<Segment> segs;
  const std::uint64_t masks = std::uint64_t{1} << (n - 1);
  for (std::uint64_t mask = 0; mask < masks; ++mask) {
    // Bit k set: cut after position k + 1.
    segs.clear();
    std::size_t begin = 0;
    for (std::size_t k = 1; k <= n; ++k) {
      if (k == n || (mask >> (k - 1)) & 1U) {
        segs.push_back({begin, k});
        begin = k;
      }
    }
    Score total(0.0);
    for (const auto& s : segs) {
      const std::size_t len = s.end - s.begin;
      total = total + ((len >= l_min && len <= hi) ? Score(score(s.begin, s.end)) : Score());
    }
    if (!total.feasible()) continue;

    bool better = total > best.total;
    if (!better && total == best.total) {
      // Compare starts from the last segment backwards.
      auto a = segs.rbegin();
      auto b = best.segments.rbegin();
      for (; a != segs.rend() && b != best.segments.rend(); ++a, ++b) {
        if (a->begin != b->begin) {
          better = a->begin < b->begin;
          break;
        }
      }
    }
    if (better) {
      best.total = total;
      best.segments = segs;
    }
  }
  return best;
}

inline BruteForceResult brute_force_partition(const SegmentScores& scores, std::size_t l_min,
                                              std::optional<std::size_t> l_max) {
  return brute_force_partition(
      scores.size(), [&](std::size_t b, std::size_t e) { return scores(b, e); }, l_min, l_max);
}

}  // namespace rdd
