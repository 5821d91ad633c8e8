#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rdd/scoring.hpp"
#include "test_support.hpp"

namespace {

using rdd::FeatureMode;

// Frames on the unit circle at the given angles (radians).
rdd::Demonstration circle_demo(const std::vector<double>& angles) {
  std::vector<float> f;
  for (double a : angles) {
    f.push_back(static_cast<float>(std::cos(a)));
    f.push_back(static_cast<float>(std::sin(a)));
  }
  return rdd::Demonstration("c", 2, f);
}

// Angle 0.1 * (n - 1 - k): distance to the last frame strictly decreasing.
std::vector<double> approach(std::size_t n) {
  std::vector<double> a(n);
  for (std::size_t k = 0; k < n; ++k) a[k] = 0.1 * static_cast<double>(n - 1 - k);
  return a;
}

}  // namespace

TEST(SimBase, Examples) {
  EXPECT_EQ(rdd::sim_base(0.0, 7, 7, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(rdd::sim_base(0.0, 5, 10, 1.0), -0.5);
  EXPECT_NEAR(rdd::sim_base(std::sqrt(2.0), 4, 4, 2.0), -1.41421356, 1e-8);

  const rdd::IntervalFeature a{rdd::Embedding{1, 0}, 5, {}, FeatureMode::full};
  const rdd::IntervalFeature b{rdd::Embedding{1, 0}, 10, {}, FeatureMode::full};
  EXPECT_DOUBLE_EQ(rdd::sim_base(a, b, 1.0), -0.5);
  const rdd::IntervalFeature e{rdd::Embedding{1, 0}, 5, {}, FeatureMode::end_only};
  EXPECT_THROW(rdd::sim_base(a, e, 1.0), rdd::Error);
}

TEST(SimBase, NonPositiveAndZeroOnlyAtIdentity) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> dur(1, 30);
  std::uniform_real_distribution<double> alpha(0.0, 3.0);
  for (int t = 0; t < 500; ++t) {
    const auto u = rdd::testing::random_unit(6, rng);
    const auto v = rdd::testing::random_unit(6, rng);
    const std::size_t p = dur(rng), q = dur(rng);
    const double s = rdd::sim_base(rdd::angular_distance(u, v), p, q, alpha(rng));
    EXPECT_LE(s, 0.0);
    EXPECT_LT(s, 0.0);  // random vectors never coincide
  }
}

TEST(SimOod, Examples) {
  EXPECT_EQ(rdd::sim_ood(0.0, 0.0, 0.7), 0.0);
  EXPECT_DOUBLE_EQ(rdd::sim_ood(0.0, -0.3, 0.1), -0.03);
  EXPECT_NEAR(rdd::sim_ood(std::sqrt(2.0), -0.9, 0.0), -std::sqrt(2.0), 1e-15);
}

TEST(Uvd, MonotoneReachesFloor) {
  const auto demo = circle_demo(approach(12));
  EXPECT_EQ(rdd::uvd_predict_begin(demo, 12, 0, 0.0), 0u);
  EXPECT_EQ(rdd::uvd_predict_begin(demo, 12, 4, 0.0), 4u);
  EXPECT_EQ(rdd::uvd_predict_begin(demo, 9, 0, 0.0), 0u);
}

TEST(Uvd, ConstantDistanceReachesFloor) {
  const auto demo = circle_demo(std::vector<double>(10, 0.3));
  EXPECT_EQ(rdd::uvd_predict_begin(demo, 10, 0, 0.0), 0u);
}

// Frame 7 sits much closer to the goal than frame 8, so walking back from the
// goal the series d_t drops at 8 -> 7 by more than the slack: the scan stops at 8.
TEST(Uvd, SingleBumpStopsScan) {
  auto angles = approach(15);
  angles[7] = 0.05;
  const auto demo = circle_demo(angles);
  // d_8 = 2 sin(0.3), d_7 = 2 sin(0.025): the drop is ~0.54, well above 1e-3.
  EXPECT_EQ(rdd::uvd_predict_begin(demo, 15, 0, 1e-3), 8u);
  // A slack wider than the drop lets the scan continue to the floor.
  EXPECT_EQ(rdd::uvd_predict_begin(demo, 15, 0, 1.0), 0u);
}

TEST(GScore, Examples) {
  const auto demo = circle_demo(approach(12));
  EXPECT_EQ(rdd::g_score(demo, {"c", 0, 12}, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(rdd::g_score(demo, {"c", 3, 9}, 0.0), -0.5);
  EXPECT_DOUBLE_EQ(rdd::g_score(demo, {"c", 6, 12}, 0.0), -1.0);
}

TEST(ScoreInterval, PerfectRetrieval) {
  std::mt19937_64 rng(2);
  const auto demo = rdd::testing::random_demo("d", 12, 4, rng);
  std::vector<rdd::IntervalFeature> db;
  for (std::size_t i = 0; i < 10; ++i) {
    db.push_back({rdd::Embedding(rdd::testing::random_unit(8, rng)), 3, {}, FeatureMode::full});
  }
  db.push_back(rdd::feature_of(demo, {"d", 2, 9}, FeatureMode::full));
  const auto idx = rdd::build_index(db);
  rdd::ScoreParams p;
  const auto s = rdd::score_interval(demo, {"d", 2, 9}, idx, p);
  EXPECT_EQ(s.score, 0.0);
  EXPECT_EQ(s.neighbor.entry, 10u);
}

TEST(ScoreInterval, DurationWeightedCombination) {
  // delta 0.2, ratio term 0.1, alpha 1, |I| 10 -> 10 * -(0.3)
  EXPECT_DOUBLE_EQ(rdd::weighted_score(10, rdd::sim_base(0.2, 10, 11, 1.0)),
                   10.0 * -(0.2 + 1.0 / 11.0));
  EXPECT_NEAR(rdd::weighted_score(10, -(0.2 + 1.0 * 0.1)), -3.0, 1e-12);
}

TEST(ScoreInterval, MatchesBruteForceNeighbor) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto demo = rdd::testing::random_demo("d", 6, 5, rng);
    std::vector<rdd::IntervalFeature> db;
    std::uniform_int_distribution<std::size_t> dur(2, 9);
    for (int i = 0; i < 20; ++i) {
      db.push_back({rdd::Embedding(rdd::testing::random_unit(10, rng)), dur(rng), {}, FeatureMode::full});
    }
    const auto idx = rdd::build_index(db);
    const auto probe = rdd::feature_of(demo, {"d", 0, 6}, FeatureMode::full);
    std::size_t best = 0;
    for (std::size_t i = 1; i < db.size(); ++i) {
      if (rdd::angular_distance(probe.vector, db[i].vector) <
          rdd::angular_distance(probe.vector, db[best].vector)) {
        best = i;
      }
    }
    rdd::ScoreParams p;
    p.alpha = 0.7;
    const auto s = rdd::score_interval(demo, {"d", 0, 6}, idx, p);
    EXPECT_EQ(s.neighbor.entry, best);
    EXPECT_EQ(s.score, 6.0 * rdd::sim_base(probe, db[best], 0.7));
  }
}

TEST(ScoreInterval, AlphaZeroIgnoresNeighborDuration) {
  std::mt19937_64 rng(4);
  const auto demo = rdd::testing::random_demo("d", 8, 3, rng);
  const auto v = rdd::Embedding(rdd::testing::random_unit(6, rng));
  rdd::ScoreParams p;
  p.alpha = 0.0;
  const auto a = rdd::score_interval(
      demo, {"d", 1, 7}, rdd::build_index(std::vector{rdd::IntervalFeature{v, 2, {}, FeatureMode::full}}), p);
  const auto b = rdd::score_interval(
      demo, {"d", 1, 7}, rdd::build_index(std::vector{rdd::IntervalFeature{v, 50, {}, FeatureMode::full}}), p);
  EXPECT_EQ(a.score, b.score);
  p.alpha = 1.0;
  const auto c = rdd::score_interval(
      demo, {"d", 1, 7}, rdd::build_index(std::vector{rdd::IntervalFeature{v, 50, {}, FeatureMode::full}}), p);
  EXPECT_LT(c.score, a.score);
}

TEST(ScoreInterval, ModeAndBoundsChecked) {
  std::mt19937_64 rng(5);
  const auto demo = rdd::testing::random_demo("d", 8, 3, rng);
  const auto full = rdd::build_index(
      std::vector{rdd::feature_of(demo, {"d", 0, 4}, FeatureMode::full)});
  rdd::ScoreParams p;
  p.mode = rdd::ScoreMode::ood;
  EXPECT_THROW(rdd::score_interval(demo, {"d", 0, 4}, full, p), rdd::Error);
  p.mode = rdd::ScoreMode::base;
  EXPECT_THROW(rdd::score_interval(demo, {"d", 0, 1}, full, p), rdd::Error);
  EXPECT_THROW(rdd::score_interval(demo, {"d", 4, 9}, full, p), rdd::Error);
}

TEST(ScoreInterval, OodUsesHeuristic) {
  const auto demo = circle_demo(approach(12));
  const auto idx = rdd::build_index(
      std::vector{rdd::feature_of(demo, {"c", 0, 12}, FeatureMode::end_only)});
  rdd::ScoreParams p;
  p.mode = rdd::ScoreMode::ood;
  p.beta = 0.5;
  p.uvd_slack = 0.0;
  // End frame matches exactly, predicted begin 0, interval begins at 3: G = -3/9.
  EXPECT_DOUBLE_EQ(rdd::score_interval(demo, {"c", 3, 12}, idx, p).score, 9.0 * 0.5 * (-3.0 / 9.0));
  p.beta = 0.0;
  EXPECT_EQ(rdd::score_interval(demo, {"c", 3, 12}, idx, p).score, 0.0);
}

// Whole-interval score equals the sum over any consecutive split when the
// similarity does not depend on the interval.
TEST(Nesting, ConstantSimilarityIsAdditive) {
  std::mt19937_64 rng(6);
  const auto v = rdd::testing::random_unit(4, rng);
  std::vector<float> frames;
  for (int k = 0; k < 60; ++k) frames.insert(frames.end(), v.begin(), v.end());
  const rdd::Demonstration demo("flat", 4, frames);
  const auto idx = rdd::build_index(std::vector{rdd::IntervalFeature{
      rdd::Embedding(rdd::testing::random_unit(4, rng)), 7, {}, FeatureMode::end_only}});
  rdd::ScoreParams p;
  p.mode = rdd::ScoreMode::ood;
  std::uniform_int_distribution<std::size_t> pick(0, 59);
  for (int t = 0; t < 100; ++t) {
    std::size_t b = pick(rng), e = pick(rng);
    if (b > e) std::swap(b, e);
    e += 1;
    if (e - b < 2) continue;
    const double whole = rdd::score_interval(demo, {"flat", b, e}, idx, p).score;
    std::size_t at = b;
    double sum = 0.0;
    while (at < e) {
      std::size_t next = std::min(e, at + 2 + pick(rng) % 10);
      if (e - next == 1) next = e;
      sum += rdd::score_interval(demo, {"flat", at, next}, idx, p).score;
      at = next;
    }
    EXPECT_NEAR(sum, whole, 1e-9 * std::abs(whole));
  }
}

TEST(Novelty, MeanOfIntervalScores) {
  EXPECT_EQ(rdd::novelty(std::vector<double>{0, 0}), 0.0);
  EXPECT_EQ(rdd::novelty(std::vector<double>{-1, -3}), -2.0);
  EXPECT_THROW(rdd::novelty(std::vector<double>{}), rdd::Error);
}

TEST(ScoreParams, Validation) {
  rdd::ScoreParams p;
  EXPECT_NO_THROW(p.validate());
  p.alpha = -1;
  EXPECT_THROW(p.validate(), rdd::Error);
  p = {};
  p.l_min = 1;
  EXPECT_THROW(p.validate(), rdd::Error);
  p = {};
  p.l_max = 1;
  EXPECT_THROW(p.validate(), rdd::Error);
}
