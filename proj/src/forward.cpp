#include "difflab/forward.hpp"

#include <algorithm>
#include <cmath>

namespace difflab {

int GmmSpec::num_classes() const {
  if (labels.empty()) return 0;
  return *std::max_element(labels.begin(), labels.end()) + 1;
}

void GmmSpec::validate() const {
  if (weights.empty()) throw ValidationError("weights", "mixture needs at least one component");
  if (means.size() != weights.size() || vars.size() != weights.size()) {
    throw ValidationError("means", "weights, means and vars must have equal length");
  }
  if (!labels.empty() && labels.size() != weights.size()) {
    throw ValidationError("labels", "one label per component required");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ValidationError("weights", "must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ValidationError("weights", "must sum to 1");
  const std::size_t d = means.front().size();
  if (d == 0) throw ValidationError("means", "dimension must be >= 1");
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (means[k].size() != d || vars[k].size() != d) {
      throw ValidationError("means", "all components must share one dimension");
    }
    for (double v : vars[k]) {
      if (!(v > 0.0)) throw ValidationError("vars", "must be positive");
    }
  }
  for (int label : labels) {
    if (label < 0) throw ValidationError("labels", "must be nonnegative");
  }
}

GmmSpec default_gmm() {
  return GmmSpec{{0.6, 0.4}, {{-2.0}, {2.0}}, {{0.25}, {0.25}}, {0, 1}};
}

Vec forward_step(ConstSpan x_prev, int t, const Schedule& sched, Rng& rng) {
  sched.check_time(t);
  const double a = std::sqrt(sched.alpha(t));
  const double s = std::sqrt(sched.beta(t));
  Vec out(x_prev.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x_prev[i] + s * rng.normal();
  return out;
}

DiagGaussian marginal_q(ConstSpan x0, int t, const Schedule& sched) {
  sched.check_time(t, 0);
  const double a = std::sqrt(sched.alpha_bar(t));
  Vec mean(x0.size());
  for (std::size_t i = 0; i < mean.size(); ++i) mean[i] = a * x0[i];
  return DiagGaussian::isotropic(std::move(mean), 1.0 - sched.alpha_bar(t));
}

NoisySample sample_xt(ConstSpan x0, int t, const Schedule& sched, Rng& rng) {
  sched.check_time(t);
  const double a = std::sqrt(sched.alpha_bar(t));
  const double s = std::sqrt(1.0 - sched.alpha_bar(t));
  NoisySample out{Vec(x0.size()), rng.normal_vector(x0.size())};
  for (std::size_t i = 0; i < x0.size(); ++i) out.x_t[i] = a * x0[i] + s * out.eps[i];
  return out;
}

DiagGaussian posterior_q(ConstSpan x_t, ConstSpan x0, int t, const Schedule& sched) {
  sched.check_time(t);
  require_same_dim("posterior_q", x0.size(), x_t.size());
  const double abar = sched.alpha_bar(t);
  const double abar_prev = sched.alpha_bar(t - 1);
  const double c0 = std::sqrt(abar_prev) * sched.beta(t) / (1.0 - abar);
  const double ct = std::sqrt(sched.alpha(t)) * (1.0 - abar_prev) / (1.0 - abar);
  Vec mean(x0.size());
  for (std::size_t i = 0; i < mean.size(); ++i) mean[i] = c0 * x0[i] + ct * x_t[i];
  return DiagGaussian::isotropic(std::move(mean), sched.beta_tilde(t));
}

Trajectory simulate_forward(ConstSpan x0, const Schedule& sched, Rng& rng) {
  Trajectory traj;
  traj.states.reserve(static_cast<std::size_t>(sched.steps()) + 1);
  traj.states.push_back({0, Vec(x0.begin(), x0.end())});
  for (int t = 1; t <= sched.steps(); ++t) {
    traj.states.push_back({t, forward_step(traj.states.back().x, t, sched, rng)});
  }
  return traj;
}

LabeledSample gmm_sample(const GmmSpec& spec, Rng& rng) {
  const double u = rng.uniform();
  std::size_t k = 0;
  double cumulative = spec.weights[0];
  while (u >= cumulative && k + 1 < spec.components()) cumulative += spec.weights[++k];
  LabeledSample out{sample(DiagGaussian(spec.means[k], spec.vars[k]), rng), std::nullopt};
  if (spec.labeled()) out.label = spec.labels[k];
  return out;
}

double gmm_log_pdf(const GmmSpec& spec, ConstSpan x) {
  require_same_dim("gmm_log_pdf", spec.dim(), x.size());
  Vec terms;
  terms.reserve(spec.components());
  for (std::size_t k = 0; k < spec.components(); ++k) {
    if (spec.weights[k] == 0.0) continue;
    terms.push_back(std::log(spec.weights[k]) + log_pdf(DiagGaussian(spec.means[k], spec.vars[k]), x));
  }
  const double top = *std::max_element(terms.begin(), terms.end());
  double acc = 0.0;
  for (double v : terms) acc += std::exp(v - top);
  return top + std::log(acc);
}

}  // namespace difflab
