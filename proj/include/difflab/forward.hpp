#pragma once

#include <optional>
#include <vector>

#include "difflab/gaussian.hpp"
#include "difflab/rng.hpp"
#include "difflab/schedule.hpp"

namespace difflab {

struct TrajectoryState {
  int t;
  Vec x;
};

/// Ordered chain of states; forward chains run t = 0..T, reverse chains T..0.
struct Trajectory {
  std::vector<TrajectoryState> states;

  std::size_t size() const noexcept { return states.size(); }
  const Vec& back() const { return states.back().x; }
};

/// Gaussian mixture used as p_data. `labels[k]` is the class id of component k;
/// an empty `labels` means the data are unlabeled.
struct GmmSpec {
  Vec weights;
  std::vector<Vec> means;
  std::vector<Vec> vars;
  std::vector<int> labels;

  std::size_t dim() const { return means.empty() ? 0 : means.front().size(); }
  std::size_t components() const noexcept { return weights.size(); }
  bool labeled() const noexcept { return !labels.empty(); }
  int num_classes() const;

  /// Throws ValidationError on an inconsistent specification.
  void validate() const;
};

/// 0.6 N(-2, 0.25) + 0.4 N(+2, 0.25), labels {0, 1}.
GmmSpec default_gmm();

struct NoisySample {
  Vec x_t;
  Vec eps;
};

/// One step of q(x_t | x_{t-1}) = N(sqrt(alpha_t) x_{t-1}, beta_t I).
Vec forward_step(ConstSpan x_prev, int t, const Schedule& sched, Rng& rng);

/// q(x_t | x_0) = N(sqrt(abar_t) x_0, (1 - abar_t) I); t = 0 gives a point mass.
DiagGaussian marginal_q(ConstSpan x0, int t, const Schedule& sched);

/// x_t = sqrt(abar_t) x_0 + sqrt(1 - abar_t) eps, returning the eps used.
NoisySample sample_xt(ConstSpan x0, int t, const Schedule& sched, Rng& rng);

/// Bayes posterior q(x_{t-1} | x_t, x_0) = N(mu_tilde, beta_tilde_t I).
/// At t = 1 this is a point mass at x_0.
DiagGaussian posterior_q(ConstSpan x_t, ConstSpan x0, int t, const Schedule& sched);

/// Chains forward_step from (0, x0) through t = T.
Trajectory simulate_forward(ConstSpan x0, const Schedule& sched, Rng& rng);

struct LabeledSample {
  Vec x;
  std::optional<int> label;
};

LabeledSample gmm_sample(const GmmSpec& spec, Rng& rng);
double gmm_log_pdf(const GmmSpec& spec, ConstSpan x);

}  // namespace difflab
