#include "difflab/losses.hpp"

#include <cmath>

namespace difflab {

namespace {

double squared_distance(ConstSpan a, ConstSpan b) {
  require_same_dim("squared_distance", a.size(), b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double r = a[i] - b[i];
    acc += r * r;
  }
  return acc;
}

void check_weighted_time(int t, const Schedule& sched) {
  sched.check_time(t, 2);
}

}  // namespace

Vec x0_from_eps(ConstSpan x_t, ConstSpan eps, int t, const Schedule& sched) {
  sched.check_time(t);
  require_same_dim("x0_from_eps", x_t.size(), eps.size());
  const double s = std::sqrt(1.0 - sched.alpha_bar(t));
  const double a = std::sqrt(sched.alpha_bar(t));
  Vec out(x_t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (x_t[i] - s * eps[i]) / a;
  return out;
}

Vec mu_tilde_from_eps(ConstSpan x_t, ConstSpan eps, int t, const Schedule& sched) {
  sched.check_time(t);
  require_same_dim("mu_tilde_from_eps", x_t.size(), eps.size());
  const double c = (1.0 - sched.alpha(t)) / std::sqrt(1.0 - sched.alpha_bar(t));
  const double a = std::sqrt(sched.alpha(t));
  Vec out(x_t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (x_t[i] - c * eps[i]) / a;
  return out;
}

double loss_x0_weighted(ConstSpan x0_hat, ConstSpan x0, int t, const Schedule& sched) {
  check_weighted_time(t, sched);
  const double one_minus_abar = 1.0 - sched.alpha_bar(t);
  const double weight = sched.alpha_bar(t - 1) * sched.beta(t) * sched.beta(t) /
                        (one_minus_abar * one_minus_abar) / (2.0 * sched.beta_tilde(t));
  return weight * squared_distance(x0_hat, x0);
}

double eps_loss_weight(int t, const Schedule& sched) {
  check_weighted_time(t, sched);
  const double one_minus_alpha = 1.0 - sched.alpha(t);
  return one_minus_alpha * one_minus_alpha /
         (sched.alpha(t) * (1.0 - sched.alpha_bar(t))) / (2.0 * sched.beta_tilde(t));
}

double loss_eps_weighted(ConstSpan eps_hat, ConstSpan eps, int t, const Schedule& sched) {
  return eps_loss_weight(t, sched) * squared_distance(eps_hat, eps);
}

double loss_simple(ConstSpan eps_hat, ConstSpan eps) { return squared_distance(eps_hat, eps); }

VlbReport vlb_estimate(const EpsFn& eps_model, ConstSpan x0, const Schedule& sched, long samples,
                       Rng& rng) {
  if (samples < 1) throw ValidationError("M", "must be >= 1");
  const int steps = sched.steps();
  VlbReport report;
  report.lt.assign(static_cast<std::size_t>(std::max(steps - 1, 0)), 0.0);
  const double inv_m = 1.0 / static_cast<double>(samples);

  const Vec decoder_var(x0.size(), sched.beta(1));
  for (long m = 0; m < samples; ++m) {
    const NoisySample s = sample_xt(x0, 1, sched, rng);
    const Vec x0_hat = mu_tilde_from_eps(s.x_t, eps_model(s.x_t, 1), 1, sched);
    report.l0 -= log_pdf(DiagGaussian(x0_hat, decoder_var), x0) * inv_m;
  }

  for (int t = 2; t <= steps; ++t) {
    double acc = 0.0;
    for (long m = 0; m < samples; ++m) {
      const NoisySample s = sample_xt(x0, t, sched, rng);
      const DiagGaussian target = posterior_q(s.x_t, x0, t, sched);
      const DiagGaussian model(mu_tilde_from_eps(s.x_t, eps_model(s.x_t, t), t, sched), target.var);
      acc += kl_closed_form(target, model);
    }
    report.lt[static_cast<std::size_t>(t - 2)] = acc * inv_m;
  }

  report.l_final = kl_closed_form(marginal_q(x0, steps, sched), DiagGaussian::standard(x0.size()));
  report.total = report.l0 + report.l_final;
  for (double v : report.lt) report.total += v;
  return report;
}

VlbReport vlb_estimate(const NoisePredictor& m, ConstSpan x0, const Schedule& sched, long samples,
                       Rng& rng) {
  return vlb_estimate(bind_eps(m, sched), x0, sched, samples, rng);
}

}  // namespace difflab
