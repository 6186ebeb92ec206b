#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "difflab/rng.hpp"
#include "oracles.hpp"

namespace difflab {
namespace {

// Known-answer vectors published with Random123.
TEST(Philox, KnownAnswerZero) {
  const auto out = philox4x32_10({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out[0], 0x6627e8d5u);
  EXPECT_EQ(out[1], 0xe169c58du);
  EXPECT_EQ(out[2], 0xbc57ac4cu);
  EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerAllOnes) {
  const auto out = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                 {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out[0], 0x408f276du);
  EXPECT_EQ(out[1], 0x41c83b0eu);
  EXPECT_EQ(out[2], 0xa20bc7c6u);
  EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPiDigits) {
  const auto out = philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                 {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out[0], 0xd16cfe09u);
  EXPECT_EQ(out[1], 0x94fdccebu);
  EXPECT_EQ(out[2], 0x5001e420u);
  EXPECT_EQ(out[3], 0x24126ea1u);
}

TEST(Rng, SameSeedAndStreamGiveSameSequence) {
  Rng a(42, 3), b(42, 3);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(a.next_u64(), b.next_u64());
    ASSERT_EQ(a.normal(), b.normal());
  }
}

TEST(Rng, StreamsAreDistinct) {
  Rng a(42, 0), b(42, 1), c(43, 0);
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u32();
    same_ab += x == b.next_u32();
    same_ac += x == c.next_u32();
  }
  EXPECT_LT(same_ab, 3);
  EXPECT_LT(same_ac, 3);
}

TEST(Rng, UniformRangeAndMoments) {
  Rng rng(1);
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sum_sq += u * u;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 0.5, 3.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(sum_sq / n - mean * mean, 1.0 / 12.0, 0.002);
}

TEST(Rng, UniformIndexIsUnbiased) {
  Rng rng(5);
  const int n = 120000, k = 6;
  std::vector<int> counts(k, 0);
  for (int i = 0; i < n; ++i) ++counts[rng.uniform_index(k)];
  const double p = 1.0 / k;
  const double se = std::sqrt(p * (1 - p) / n);
  for (int c : counts) EXPECT_NEAR(static_cast<double>(c) / n, p, 4.0 * se);
}

TEST(Rng, NormalMoments) {
  Rng rng(9);
  const int n = 400000;
  std::vector<double> v(n);
  rng.fill_normal(v);
  EXPECT_NEAR(oracle::mean_of(v), 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(oracle::variance_of(v), 1.0, 4.0 * std::sqrt(2.0 / n));
  double fourth = 0.0;
  for (double x : v) fourth += x * x * x * x;
  EXPECT_NEAR(fourth / n, 3.0, 0.05);
}

TEST(Rng, NormalDrawCounter) {
  Rng rng(2);
  EXPECT_EQ(rng.normal_draws(), 0u);
  rng.normal();
  rng.normal_vector(5);
  EXPECT_EQ(rng.normal_draws(), 6u);
  rng.uniform();
  EXPECT_EQ(rng.normal_draws(), 6u);
}

TEST(Rng, BernoulliEdges) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    EXPECT_FALSE(rng.bernoulli(0.0));
    EXPECT_TRUE(rng.bernoulli(1.0));
  }
}

}  // namespace
}  // namespace difflab
