#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "difflab/error.hpp"
#include "difflab/gaussian.hpp"
#include "oracles.hpp"

namespace difflab {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274;

TEST(LogPdf, StandardNormalAtZero) {
  EXPECT_NEAR(log_pdf(DiagGaussian::standard(1), Vec{0.0}), -kHalfLog2Pi, 1e-15);
  EXPECT_NEAR(log_pdf(DiagGaussian::standard(1), Vec{0.0}), -0.9189385, 1e-7);
}

TEST(LogPdf, AtTheMean) {
  const DiagGaussian g({1.0, -2.0, 0.5}, {0.3, 2.0, 7.0});
  double expected = 0.0;
  for (double v : g.var) expected -= 0.5 * std::log(2.0 * std::numbers::pi * v);
  EXPECT_NEAR(log_pdf(g, g.mean), expected, 1e-14);
}

TEST(LogPdf, OffsetArithmetic) {
  EXPECT_NEAR(log_pdf(DiagGaussian({1.0}, {1.0}), Vec{0.0}), -1.4189385, 1e-7);
}

TEST(LogPdf, DimensionMismatch) {
  EXPECT_THROW(log_pdf(DiagGaussian::standard(2), Vec{0.0}), DimensionError);
}

TEST(Sample, PointMassReturnsMean) {
  Rng rng(1);
  const DiagGaussian g({1.5, -3.0}, {0.0, 0.0});
  for (int i = 0; i < 10; ++i) EXPECT_EQ(sample(g, rng), g.mean);
}

TEST(Sample, StandardMoments) {
  Rng rng(11);
  const int n = 1000000;
  std::vector<double> xs(n);
  const DiagGaussian g = DiagGaussian::standard(1);
  for (auto& x : xs) x = sample(g, rng)[0];
  EXPECT_NEAR(oracle::mean_of(xs), 0.0, 0.01);
  EXPECT_NEAR(oracle::variance_of(xs), 1.0, 0.01);
}

TEST(Sample, AffineConstructionIsBitwise) {
  const double mu = 0.7, sigma = 1.3;
  Rng a(4), b(4);
  const DiagGaussian g({mu}, {sigma * sigma});
  const DiagGaussian s = DiagGaussian::standard(1);
  for (int i = 0; i < 1000; ++i) {
    const double x = sample(g, a)[0];
    const double z = sample(s, b)[0];
    ASSERT_EQ(x, mu + std::sqrt(sigma * sigma) * z);
  }
}

TEST(KlClosedForm, IdenticalIsZero) {
  const DiagGaussian q({0.3, -1.0}, {0.5, 2.0});
  EXPECT_LT(std::abs(kl_closed_form(q, q)), 1e-12);
}

TEST(KlClosedForm, UnitVsWidePairMatchesQuadrature) {
  const double quad = oracle::kl_by_quadrature(1.0, 1.0, 0.0, 4.0, -12.0, 12.0);
  EXPECT_NEAR(quad, 0.443147, 5e-7);
  const double kl = kl_closed_form(DiagGaussian({1.0}, {1.0}), DiagGaussian({0.0}, {4.0}));
  EXPECT_NEAR(kl, quad, 1e-9);
}

TEST(KlClosedForm, EqualVarianceReduction) {
  const double v = 0.7;
  const DiagGaussian q = DiagGaussian::isotropic({1.0, 2.0, -0.5}, v);
  const DiagGaussian p = DiagGaussian::isotropic({0.0, 2.5, 0.5}, v);
  const double sq = 1.0 + 0.25 + 1.0;
  EXPECT_NEAR(kl_closed_form(q, p), sq / (2.0 * v), 1e-14);
}

TEST(KlClosedForm, NonnegativeOnRandomPairs) {
  Rng rng(6);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t d = 1 + rng.uniform_index(4);
    DiagGaussian q, p;
    for (std::size_t k = 0; k < d; ++k) {
      q.mean.push_back(4.0 * rng.uniform() - 2.0);
      p.mean.push_back(4.0 * rng.uniform() - 2.0);
      q.var.push_back(0.1 + 3.0 * rng.uniform());
      p.var.push_back(0.1 + 3.0 * rng.uniform());
    }
    EXPECT_GE(kl_closed_form(q, p), 0.0);
  }
}

TEST(KlClosedForm, Errors) {
  EXPECT_THROW(kl_closed_form(DiagGaussian::standard(1), DiagGaussian::standard(2)), DimensionError);
  EXPECT_THROW(kl_closed_form(DiagGaussian({0.0}, {0.0}), DiagGaussian::standard(1)), ValidationError);
}

TEST(KlMc, IdenticalIsExactlyZero) {
  Rng rng(2);
  const DiagGaussian q({0.5}, {2.0});
  EXPECT_EQ(kl_mc(q, q, 1000, rng), 0.0);
}

TEST(KlMc, RejectsZeroSamples) {
  Rng rng(2);
  EXPECT_THROW(kl_mc(DiagGaussian::standard(1), DiagGaussian::standard(1), 0, rng), ValidationError);
}

// Standard error of the MC KL estimator from the per-draw log-ratio variance.
double kl_mc_std_error(const DiagGaussian& q, const DiagGaussian& p, long n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> terms(n);
  for (auto& v : terms) {
    const Vec x = sample(q, rng);
    v = log_pdf(q, x) - log_pdf(p, x);
  }
  return std::sqrt(oracle::variance_of(terms) / static_cast<double>(n));
}

TEST(KlMc, UnitVsWidePairWithinThreeStandardErrors) {
  const DiagGaussian q({1.0}, {1.0}), p({0.0}, {4.0});
  Rng rng(77);
  const long n = 1000000;
  const double est = kl_mc(q, p, n, rng);
  const double se = kl_mc_std_error(q, p, n, 78);
  EXPECT_NEAR(est, 0.443147, 3.0 * se);
}

TEST(KlMc, UnbiasedAtOneSample) {
  const DiagGaussian q({1.0}, {1.0}), p({0.0}, {4.0});
  Rng rng(12);
  const int reps = 100000;
  std::vector<double> est(reps);
  for (auto& e : est) e = kl_mc(q, p, 1, rng);
  const double se = std::sqrt(oracle::variance_of(est) / reps);
  EXPECT_NEAR(oracle::mean_of(est), kl_closed_form(q, p), 3.0 * se);
}

TEST(KlMc, AgreesWithClosedFormOnRandomPairs) {
  Rng gen(31);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t d = 1 + gen.uniform_index(4);
    DiagGaussian q, p;
    for (std::size_t k = 0; k < d; ++k) {
      q.mean.push_back(2.0 * gen.uniform() - 1.0);
      p.mean.push_back(2.0 * gen.uniform() - 1.0);
      q.var.push_back(0.5 + gen.uniform());
      p.var.push_back(0.5 + gen.uniform());
    }
    Rng rng(100 + trial);
    const long n = 100000;
    const double est = kl_mc(q, p, n, rng);
    const double se = kl_mc_std_error(q, p, n, 200 + trial);
    EXPECT_NEAR(est, kl_closed_form(q, p), 4.0 * std::sqrt(2.0) * se) << "trial " << trial;
  }
}

TEST(SumOfGaussians, VarianceMatchesComposite) {
  Rng rng(8);
  for (int trial = 0; trial < 3; ++trial) {
    const double a = 0.05 + 0.9 * rng.uniform();
    const double b = 0.05 + 0.9 * rng.uniform();
    const int n = 1000000;
    std::vector<double> v(n);
    for (auto& x : v) x = std::sqrt(a * (1 - b)) * rng.normal() + std::sqrt(1 - a) * rng.normal();
    const double target = 1 - a * b;
    // Standard error of a sample variance of a Gaussian: var * sqrt(2 / (n - 1)).
    EXPECT_NEAR(oracle::variance_of(v), target, 3.0 * target * std::sqrt(2.0 / (n - 1)));
  }
}

}  // namespace
}  // namespace difflab
