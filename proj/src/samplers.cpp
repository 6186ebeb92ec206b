#include "difflab/samplers.hpp"

#include <algorithm>
#include <cmath>

namespace difflab {

namespace {

constexpr double kSigmaSlack = 1e-12;

double direction_variance(double sigma_t, int t, const Schedule& sched) {
  const double budget = 1.0 - sched.alpha_bar(t - 1);
  const double sigma_sq = sigma_t * sigma_t;
  if (!(sigma_t >= 0.0) || sigma_sq > budget * (1.0 + kSigmaSlack)) {
    throw ValidationError("sigma", "sigma_t^2 must lie in [0, 1 - abar_{t-1}] at t = " +
                                       std::to_string(t));
  }
  return std::max(budget - sigma_sq, 0.0);
}

}  // namespace

void SamplerConfig::validate(const Schedule& sched) const {
  if (chains < 1) throw ValidationError("chains", "must be >= 1");
  if (kind == SamplerKind::kDdim && sigma == SigmaPolicy::kExplicit) {
    if (explicit_sigmas.size() != static_cast<std::size_t>(sched.steps())) {
      throw ValidationError("sigma", "explicit sigmas need one value per step");
    }
    for (int t = 1; t <= sched.steps(); ++t) direction_variance(explicit_sigmas[t - 1], t, sched);
  }
}

Vec ddpm_mean(const EpsFn& eps_model, ConstSpan x_t, int t, const Schedule& sched) {
  sched.check_time(t);
  const Vec eps_hat = eps_model(x_t, t);
  require_same_dim("ddpm_mean", x_t.size(), eps_hat.size());
  const double c = (1.0 - sched.alpha(t)) / std::sqrt(1.0 - sched.alpha_bar(t));
  const double a = std::sqrt(sched.alpha(t));
  Vec out(x_t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (x_t[i] - c * eps_hat[i]) / a;
  return out;
}

Vec ddpm_step(const EpsFn& eps_model, ConstSpan x_t, int t, const Schedule& sched, Rng& rng) {
  Vec out = ddpm_mean(eps_model, x_t, t, sched);
  if (t > 1) {
    const double s = std::sqrt(sched.beta_tilde(t));
    for (double& v : out) v += s * rng.normal();
  }
  return out;
}

double ddim_sigma_ddpm_equiv(int t, const Schedule& sched) {
  sched.check_time(t);
  if (t == 1) return 0.0;
  const double abar = sched.alpha_bar(t);
  const double abar_prev = sched.alpha_bar(t - 1);
  return std::sqrt((1.0 - abar_prev) / (1.0 - abar)) * std::sqrt(1.0 - abar / abar_prev);
}

Vec ddim_mean(const EpsFn& eps_model, ConstSpan x_t, int t, double sigma_t, const Schedule& sched) {
  sched.check_time(t);
  const double direction = std::sqrt(direction_variance(sigma_t, t, sched));
  const Vec eps_hat = eps_model(x_t, t);
  require_same_dim("ddim_mean", x_t.size(), eps_hat.size());
  const double a = std::sqrt(sched.alpha(t));
  const double s = std::sqrt(1.0 - sched.alpha_bar(t));
  Vec out(x_t.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (x_t[i] - s * eps_hat[i]) / a + direction * eps_hat[i];
  }
  return out;
}

Vec ddim_step(const EpsFn& eps_model, ConstSpan x_t, int t, double sigma_t, const Schedule& sched,
              Rng& rng) {
  Vec out = ddim_mean(eps_model, x_t, t, sigma_t, sched);
  if (sigma_t > 0.0 && t > 1) {
    for (double& v : out) v += sigma_t * rng.normal();
  }
  return out;
}

double ddim_sigma(const SamplerConfig& cfg, int t, const Schedule& sched) {
  switch (cfg.sigma) {
    case SigmaPolicy::kZero:
      return 0.0;
    case SigmaPolicy::kDdpmEquivalent:
      return ddim_sigma_ddpm_equiv(t, sched);
    case SigmaPolicy::kExplicit:
      sched.check_time(t);
      return cfg.explicit_sigmas.at(static_cast<std::size_t>(t - 1));
  }
  return 0.0;
}

std::vector<Trajectory> run_reverse_chains(const ReverseStepFn& step, std::size_t dim,
                                           const SamplerConfig& cfg, const Schedule& sched) {
  cfg.validate(sched);
  if (cfg.fixed_start) require_same_dim("fixed_start", dim, cfg.fixed_start->size());
  std::vector<Trajectory> chains(static_cast<std::size_t>(cfg.chains));
  for (int c = 0; c < cfg.chains; ++c) {
    Rng rng(cfg.seed, static_cast<std::uint64_t>(c));
    Vec x = cfg.fixed_start ? *cfg.fixed_start : rng.normal_vector(dim);
    Trajectory& traj = chains[static_cast<std::size_t>(c)];
    if (cfg.record_trajectory) {
      traj.states.reserve(static_cast<std::size_t>(sched.steps()) + 1);
      traj.states.push_back({sched.steps(), x});
    }
    for (int t = sched.steps(); t >= 1; --t) {
      x = step(x, t, rng);
      if (cfg.record_trajectory) traj.states.push_back({t - 1, x});
    }
    if (!cfg.record_trajectory) traj.states.push_back({0, std::move(x)});
  }
  return chains;
}

std::vector<Trajectory> sample_reverse(const EpsFn& eps_model, std::size_t dim,
                                       const SamplerConfig& cfg, const Schedule& sched) {
  if (cfg.kind == SamplerKind::kDdpm) {
    return run_reverse_chains(
        [&](ConstSpan x, int t, Rng& rng) { return ddpm_step(eps_model, x, t, sched, rng); }, dim,
        cfg, sched);
  }
  return run_reverse_chains(
      [&](ConstSpan x, int t, Rng& rng) {
        return ddim_step(eps_model, x, t, ddim_sigma(cfg, t, sched), sched, rng);
      },
      dim, cfg, sched);
}

std::vector<Trajectory> sample_reverse(const NoisePredictor& m, const SamplerConfig& cfg,
                                       const Schedule& sched, std::optional<int> y) {
  return sample_reverse(bind_eps(m, sched, y), static_cast<std::size_t>(m.data_dim()), cfg, sched);
}

std::string to_string(SamplerKind kind) { return kind == SamplerKind::kDdpm ? "ddpm" : "ddim"; }

std::string to_string(SigmaPolicy policy) {
  switch (policy) {
    case SigmaPolicy::kZero:
      return "zero";
    case SigmaPolicy::kDdpmEquivalent:
      return "ddpm";
    case SigmaPolicy::kExplicit:
      return "explicit";
  }
  return "zero";
}

}  // namespace difflab
