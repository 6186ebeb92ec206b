#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "difflab/error.hpp"
#include "difflab/forward.hpp"
#include "oracles.hpp"

namespace difflab {
namespace {

// Sample-variance standard error for Gaussian data.
double var_se(double var, long n) { return var * std::sqrt(2.0 / (n - 1)); }

TEST(ForwardStep, NearIdentityKernel) {
  const Schedule s({1e-12});
  Rng rng(1);
  const Vec x{0.3, -1.2};
  for (int i = 0; i < 100; ++i) {
    const Vec y = forward_step(x, 1, s, rng);
    for (std::size_t k = 0; k < x.size(); ++k) EXPECT_NEAR(y[k], x[k], 1e-5);
  }
}

TEST(ForwardStep, MomentsFromZero) {
  const Schedule s = make_linear_schedule(10, 0.05, 0.3);
  Rng rng(2);
  const int n = 100000;
  const int t = 4;
  std::vector<double> v(n);
  for (auto& x : v) x = forward_step(Vec{0.0}, t, s, rng)[0];
  EXPECT_NEAR(oracle::mean_of(v), 0.0, 3.0 * std::sqrt(s.beta(t) / n));
  EXPECT_NEAR(oracle::variance_of(v), s.beta(t), 3.0 * var_se(s.beta(t), n));
}

TEST(ForwardStep, ChainedTwoStepsMatchCompositeVariance) {
  const Schedule s = make_linear_schedule(2, 0.1, 0.2);
  Rng rng(3);
  const int n = 100000;
  std::vector<double> v(n);
  for (auto& x : v) {
    const Vec x1 = forward_step(Vec{1.0}, 1, s, rng);
    x = forward_step(x1, 2, s, rng)[0];
  }
  const double var = 1.0 - s.alpha_bar(2);
  EXPECT_NEAR(oracle::variance_of(v), var, 3.0 * var_se(var, n));
  EXPECT_NEAR(oracle::mean_of(v), std::sqrt(s.alpha_bar(2)), 3.0 * std::sqrt(var / n));
}

TEST(ForwardStep, TimeOutOfRange) {
  const Schedule s = make_linear_schedule(3, 0.1, 0.2);
  Rng rng(0);
  EXPECT_THROW(forward_step(Vec{0.0}, 0, s, rng), ValidationError);
  EXPECT_THROW(forward_step(Vec{0.0}, 4, s, rng), ValidationError);
}

TEST(MarginalQ, PointMassAtZero) {
  const Schedule s = make_linear_schedule(5, 0.1, 0.2);
  const DiagGaussian g = marginal_q(Vec{1.5, -2.0}, 0, s);
  EXPECT_EQ(g.mean, (Vec{1.5, -2.0}));
  EXPECT_EQ(g.var, (Vec{0.0, 0.0}));
}

TEST(MarginalQ, Arithmetic) {
  const Schedule s({0.75});
  const DiagGaussian g = marginal_q(Vec{1.0}, 1, s);
  EXPECT_NEAR(g.mean[0], 0.5, 1e-15);
  EXPECT_NEAR(g.var[0], 0.75, 1e-15);
}

TEST(MarginalQ, CanonicalTerminal) {
  const Schedule s = make_linear_schedule(1000, 1e-4, 0.02);
  const Vec x0{3.0};
  const DiagGaussian g = marginal_q(x0, 1000, s);
  EXPECT_LT(std::abs(g.mean[0]), 0.01 * 3.0);
  EXPECT_NEAR(g.var[0], 1.0, 1e-4);
  EXPECT_THROW(marginal_q(x0, 1001, s), ValidationError);
}

TEST(SampleXt, ConstructionIdentity) {
  const Schedule s = make_linear_schedule(100, 1e-3, 0.1);
  Rng rng(4);
  for (int t = 1; t <= 100; t += 9) {
    const Vec x0{0.7, -1.1};
    const NoisySample ns = sample_xt(x0, t, s, rng);
    for (std::size_t k = 0; k < 2; ++k) {
      const double rebuilt = std::sqrt(s.alpha_bar(t)) * x0[k] + std::sqrt(1 - s.alpha_bar(t)) * ns.eps[k];
      EXPECT_NEAR(ns.x_t[k], rebuilt, 1e-15);
    }
  }
}

TEST(SampleXt, MomentsMatchMarginal) {
  const Schedule s = make_linear_schedule(50, 1e-3, 0.1);
  Rng rng(5);
  const int n = 100000, t = 20;
  std::vector<double> v(n);
  for (auto& x : v) x = sample_xt(Vec{2.0}, t, s, rng).x_t[0];
  const DiagGaussian g = marginal_q(Vec{2.0}, t, s);
  EXPECT_NEAR(oracle::mean_of(v), g.mean[0], 3.0 * std::sqrt(g.var[0] / n));
  EXPECT_NEAR(oracle::variance_of(v), g.var[0], 3.0 * var_se(g.var[0], n));
}

TEST(SampleXt, Deterministic) {
  const Schedule s = make_linear_schedule(50, 1e-3, 0.1);
  Rng a(9, 2), b(9, 2);
  const NoisySample x = sample_xt(Vec{1.0, 2.0}, 10, s, a);
  const NoisySample y = sample_xt(Vec{1.0, 2.0}, 10, s, b);
  EXPECT_EQ(x.x_t, y.x_t);
  EXPECT_EQ(x.eps, y.eps);
  EXPECT_THROW(sample_xt(Vec{1.0}, 0, s, a), ValidationError);
}

TEST(PosteriorQ, FirstStepCollapses) {
  const Schedule s = make_linear_schedule(10, 0.1, 0.2);
  const DiagGaussian g = posterior_q(Vec{0.4}, Vec{-1.0}, 1, s);
  EXPECT_NEAR(g.mean[0], -1.0, 1e-15);
  EXPECT_EQ(g.var[0], 0.0);
}

TEST(PosteriorQ, ZeroInputsGiveZeroMean) {
  const Schedule s = make_linear_schedule(10, 0.1, 0.2);
  EXPECT_EQ(posterior_q(Vec{0.0}, Vec{0.0}, 5, s).mean[0], 0.0);
}

TEST(PosteriorQ, MatchesBayesGridOnTwoStepSchedule) {
  const std::vector<double> betas{0.1, 0.2};
  const Schedule s(betas);
  const auto grid = oracle::make_grid(-6.0, 6.0, 2001);
  const auto oracle_lp = oracle::bayes_log_posterior_on_grid(1.0, 0.5, 2, betas, grid);
  const DiagGaussian g = posterior_q(Vec{0.5}, Vec{1.0}, 2, s);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    ASSERT_NEAR(log_pdf(g, Vec{grid[i]}), oracle_lp[i], 1e-8) << "x=" << grid[i];
  }
}

TEST(PosteriorQ, MatchesBayesGridOnRandomCases) {
  Rng gen(17);
  const std::vector<double> betas = [] {
    std::vector<double> b(50);
    for (int i = 0; i < 50; ++i) b[i] = 1e-3 + (0.2 - 1e-3) * i / 49.0;
    return b;
  }();
  const Schedule s(betas);
  for (int c = 0; c < 100; ++c) {
    const int t = 2 + static_cast<int>(gen.uniform_index(49));
    const double x0 = 4.0 * gen.uniform() - 2.0;
    const double xt = 4.0 * gen.uniform() - 2.0;
    const DiagGaussian g = posterior_q(Vec{xt}, Vec{x0}, t, s);
    const double sd = std::sqrt(g.var[0]);
    const auto grid = oracle::make_grid(g.mean[0] - 12 * sd, g.mean[0] + 12 * sd, 4001);
    const auto oracle_lp = oracle::bayes_log_posterior_on_grid(x0, xt, t, betas, grid);
    double worst = 0.0;
    // Compare where the density is not vanishingly small (within 6 sd).
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (std::abs(grid[i] - g.mean[0]) > 6 * sd) continue;
      worst = std::max(worst, std::abs(log_pdf(g, Vec{grid[i]}) - oracle_lp[i]));
    }
    EXPECT_LT(worst, 1e-6) << "case " << c << " t=" << t;
  }
}

TEST(PosteriorQ, MeanIsAffineWithDocumentedCoefficients) {
  const Schedule s = make_linear_schedule(20, 0.01, 0.2);
  const int t = 7;
  const double c0 = std::sqrt(s.alpha_bar(t - 1)) * s.beta(t) / (1 - s.alpha_bar(t));
  const double ct = std::sqrt(s.alpha(t)) * (1 - s.alpha_bar(t - 1)) / (1 - s.alpha_bar(t));
  const double probes[3][2] = {{1.0, 0.0}, {0.0, 1.0}, {0.5, -2.0}};
  for (const auto& p : probes) {
    const double mean = posterior_q(Vec{p[1]}, Vec{p[0]}, t, s).mean[0];
    EXPECT_NEAR(mean, c0 * p[0] + ct * p[1], 1e-14);
  }
}

TEST(SimulateForward, LengthAndTimes) {
  const Schedule s = make_linear_schedule(1, 0.5, 0.5);
  Rng rng(1);
  const Trajectory tr = simulate_forward(Vec{1.0}, s, rng);
  ASSERT_EQ(tr.size(), 2u);
  EXPECT_EQ(tr.states[0].t, 0);
  EXPECT_EQ(tr.states[1].t, 1);
  EXPECT_EQ(tr.states[0].x, Vec{1.0});
}

TEST(SimulateForward, TerminalMomentsOver25000Trajectories) {
  const Schedule s = make_linear_schedule(100, 1e-3, 0.1);
  Rng rng(21);
  const int n = 25000;
  std::vector<double> v(n);
  for (auto& x : v) x = simulate_forward(Vec{1.0}, s, rng).back()[0];
  const DiagGaussian g = marginal_q(Vec{1.0}, 100, s);
  EXPECT_NEAR(oracle::mean_of(v), g.mean[0], 3.0 * std::sqrt(g.var[0] / n));
  EXPECT_NEAR(oracle::variance_of(v), g.var[0], 3.0 * var_se(g.var[0], n));
}

TEST(SimulateForward, Reproducible) {
  const Schedule s = make_linear_schedule(30, 1e-3, 0.1);
  Rng a(5), b(5);
  const Trajectory x = simulate_forward(Vec{0.2}, s, a);
  const Trajectory y = simulate_forward(Vec{0.2}, s, b);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x.states[i].x, y.states[i].x);
}

TEST(Gmm, DefaultSpec) {
  const GmmSpec g = default_gmm();
  EXPECT_NO_THROW(g.validate());
  EXPECT_EQ(g.num_classes(), 2);
  EXPECT_EQ(g.weights, (Vec{0.6, 0.4}));
}

TEST(Gmm, ValidationRejectsBadWeights) {
  GmmSpec g = default_gmm();
  g.weights = {0.5, 0.4};
  EXPECT_THROW(g.validate(), ValidationError);
}

TEST(Gmm, SingleComponentReducesToGaussian) {
  GmmSpec g{{1.0}, {{0.5}}, {{2.0}}, {}};
  Rng a(3), b(3);
  const DiagGaussian gauss({0.5}, {2.0});
  for (int i = 0; i < 100; ++i) {
    const LabeledSample ls = gmm_sample(g, a);
    EXPECT_FALSE(ls.label.has_value());
    // Component choice consumes uniforms but no normals.
    b.uniform();
    EXPECT_EQ(ls.x, sample(gauss, b));
  }
  EXPECT_NEAR(gmm_log_pdf(g, Vec{1.0}), log_pdf(gauss, Vec{1.0}), 1e-14);
}

TEST(Gmm, ComponentFrequencies) {
  const GmmSpec g = default_gmm();
  Rng rng(44);
  const int n = 100000;
  int ones = 0;
  for (int i = 0; i < n; ++i) {
    const LabeledSample ls = gmm_sample(g, rng);
    ASSERT_TRUE(std::isfinite(gmm_log_pdf(g, ls.x)));
    ones += *ls.label == 1;
  }
  EXPECT_NEAR(static_cast<double>(ones) / n, 0.4, 3.0 * std::sqrt(0.24 / n));
}

TEST(Gmm, SymmetricMidpointResponsibilities) {
  GmmSpec g{{0.5, 0.5}, {{-1.0}, {1.0}}, {{0.3}, {0.3}}, {0, 1}};
  const double lp = gmm_log_pdf(g, Vec{0.0});
  const double each = std::log(0.5) + oracle::normal_log_density(0.0, -1.0, 0.3);
  EXPECT_NEAR(lp, each + std::log(2.0), 1e-14);
}

TEST(Gmm, DensityIntegratesToOne) {
  const GmmSpec g = default_gmm();
  const double total = oracle::trapezoid([&](double x) { return std::exp(gmm_log_pdf(g, Vec{x})); },
                                         -10.0, 10.0, 200001);
  EXPECT_NEAR(total, 1.0, 1e-6);
  EXPECT_THROW(gmm_log_pdf(g, Vec{0.0, 1.0}), DimensionError);
}

}  // namespace
}  // namespace difflab
