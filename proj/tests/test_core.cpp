#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rdd/core.hpp"
#include "test_support.hpp"

using rdd::Embedding;

TEST(AngularDistance, IdenticalIsZero) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const auto u = rdd::testing::random_unit(16, rng);
    EXPECT_EQ(rdd::angular_distance(u, u), 0.0);
  }
}

TEST(AngularDistance, OrthogonalAndOpposite) {
  EXPECT_NEAR(rdd::angular_distance(Embedding{1, 0, 0}, Embedding{0, 1, 0}), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(rdd::angular_distance(Embedding{0.6f, 0.8f}, Embedding{-0.6f, -0.8f}), 2.0, 1e-7);
}

TEST(AngularDistance, RejectsMismatchAndZero) {
  try {
    rdd::angular_distance(Embedding{1, 0}, Embedding{1, 0, 0});
    FAIL() << "expected dimension mismatch";
  } catch (const rdd::Error& e) {
    EXPECT_EQ(e.code(), rdd::Errc::dimension_mismatch);
  }
  EXPECT_THROW(rdd::angular_distance(Embedding{0, 0}, Embedding{1, 0}), rdd::Error);
}

TEST(AngularDistance, SymmetricBoundedTriangle) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    const auto a = rdd::testing::random_unit(8, rng);
    const auto b = rdd::testing::random_unit(8, rng);
    const auto c = rdd::testing::random_unit(8, rng);
    const double ab = rdd::angular_distance(a, b);
    EXPECT_EQ(ab, rdd::angular_distance(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 2.0);
    // Chord length on the unit sphere is a metric.
    EXPECT_LE(ab, rdd::angular_distance(a, c) + rdd::angular_distance(c, b) + 1e-9);
  }
}

TEST(Normalize, ThreeFourFive) {
  const auto v = rdd::normalize(Embedding{3, 4});
  EXPECT_FLOAT_EQ(v[0], 0.6f);
  EXPECT_FLOAT_EQ(v[1], 0.8f);
  EXPECT_TRUE(v.normalized());
}

TEST(Normalize, IdempotentBitForBit) {
  std::mt19937_64 rng(3);
  std::normal_distribution<float> g(0.0f, 5.0f);
  for (int t = 0; t < 100; ++t) {
    std::vector<float> raw(13);
    for (auto& x : raw) x = g(rng);
    const auto once = rdd::normalize(Embedding(raw));
    EXPECT_EQ(rdd::normalize(once), once);
  }
}

TEST(Normalize, ZeroVectorRejected) {
  EXPECT_THROW(rdd::normalize(Embedding{0, 0}), rdd::Error);
}

TEST(Interval, ClosedForm) {
  const rdd::Interval iv{"d", 3, 8};
  EXPECT_EQ(iv.duration(), 5u);
  EXPECT_EQ(iv.closed(), (std::pair<std::size_t, std::size_t>{3, 7}));
}

TEST(Demonstration, Invariants) {
  std::vector<float> one_frame{1, 0};
  EXPECT_THROW(rdd::Demonstration("d", 2, one_frame), rdd::Error);
  std::vector<float> ragged{1, 0, 0};
  EXPECT_THROW(rdd::Demonstration("d", 2, ragged), rdd::Error);

  std::vector<float> ten(20, 0.5f);
  EXPECT_NO_THROW(rdd::Demonstration("d", 2, ten, std::vector<std::size_t>{5, 10}));
  for (auto bad : {std::vector<std::size_t>{5, 9}, std::vector<std::size_t>{0, 10},
                   std::vector<std::size_t>{6, 6, 10}, std::vector<std::size_t>{}}) {
    EXPECT_THROW(rdd::Demonstration("d", 2, ten, bad), rdd::Error);
  }
  try {
    rdd::Demonstration("d", 2, ten, std::vector<std::size_t>{5, 9});
  } catch (const rdd::Error& e) {
    EXPECT_NE(std::string(e.what()).find("boundaries must end at frame_count"), std::string::npos);
  }
}

TEST(Partition, Consecutive) {
  rdd::Partition p{{{"d", 0, 3}, {"d", 3, 7}}, 7};
  EXPECT_TRUE(p.consecutive());
  EXPECT_EQ(p.boundaries(), (std::vector<std::size_t>{3, 7}));
  rdd::Partition gap{{{"d", 0, 3}, {"d", 4, 7}}, 7};
  EXPECT_FALSE(gap.consecutive());
}
