#pragma once

#include <vector>

#include "difflab/forward.hpp"
#include "difflab/model.hpp"

namespace difflab {

/// x_0 = (x_t - sqrt(1 - abar_t) eps) / sqrt(abar_t).
Vec x0_from_eps(ConstSpan x_t, ConstSpan eps, int t, const Schedule& sched);

/// Posterior mean in noise form: (x_t - (1 - alpha_t)/sqrt(1 - abar_t) eps) / sqrt(alpha_t).
Vec mu_tilde_from_eps(ConstSpan x_t, ConstSpan eps, int t, const Schedule& sched);

/// 1/(2 btilde_t) * abar_{t-1} beta_t^2 / (1 - abar_t)^2 * ||x0_hat - x0||^2, t in [2, T].
double loss_x0_weighted(ConstSpan x0_hat, ConstSpan x0, int t, const Schedule& sched);

/// 1/(2 btilde_t) * (1 - alpha_t)^2 / (alpha_t (1 - abar_t)) * ||eps_hat - eps||^2, t in [2, T].
double loss_eps_weighted(ConstSpan eps_hat, ConstSpan eps, int t, const Schedule& sched);

/// Weight multiplying ||eps_hat - eps||^2 in loss_eps_weighted.
double eps_loss_weight(int t, const Schedule& sched);

/// ||eps_hat - eps||^2.
double loss_simple(ConstSpan eps_hat, ConstSpan eps);

/// Terms of the variational bound, in nats.
struct VlbReport {
  double l0 = 0.0;
  std::vector<double> lt;  // lt[i] holds the term for t = i + 2
  double l_final = 0.0;    // prior-matching term L_T
  double total = 0.0;
};

/// Monte-Carlo estimate of L_0 + sum_{t=2..T} L_{t-1} + L_T for one x_0.
///
/// Each consistency term averages, over `samples` draws x_t ~ q(x_t | x_0),
/// the closed-form KL between the Bayes posterior and the model's reverse
/// Gaussian N(mu_tilde_from_eps(x_t, eps_hat), btilde_t I). L_0 is the
/// negative log-likelihood of x_0 under the decoder N(x0_hat(x_1), beta_1 I).
VlbReport vlb_estimate(const EpsFn& eps_model, ConstSpan x0, const Schedule& sched, long samples,
                       Rng& rng);
VlbReport vlb_estimate(const NoisePredictor& m, ConstSpan x0, const Schedule& sched, long samples,
                       Rng& rng);

}  // namespace difflab
