#include "difflab/guidance.hpp"

#include <cmath>

#include "difflab/losses.hpp"

namespace difflab {

LogLikelihoodGradFn bind_classifier_grad(const Classifier& c, const Schedule& sched) {
  return [&c, &sched](ConstSpan x, int t, int y) { return classifier_grad_x(c, x, t, y, sched); };
}

Vec guided_ddpm_mean(const EpsFn& eps_model, const LogLikelihoodGradFn& grad, ConstSpan x_t, int t,
                     int y, double scale, const Schedule& sched) {
  if (!(scale >= 0.0)) throw ValidationError("scale", "guidance scale must be >= 0");
  Vec mean = mu_tilde_from_eps(x_t, eps_model(x_t, t), t, sched);
  const Vec g = grad(mean, t, y);
  require_same_dim("guided_ddpm_mean", mean.size(), g.size());
  const double shift = scale * sched.beta_tilde(t);
  for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += shift * g[i];
  return mean;
}

Vec guided_ddpm_step(const EpsFn& eps_model, const LogLikelihoodGradFn& grad, ConstSpan x_t, int t,
                     int y, double scale, const Schedule& sched, Rng& rng) {
  Vec out = guided_ddpm_mean(eps_model, grad, x_t, t, y, scale, sched);
  if (t > 1) {
    const double s = std::sqrt(sched.beta_tilde(t));
    for (double& v : out) v += s * rng.normal();
  }
  return out;
}

Vec guided_ddpm_step(const NoisePredictor& m, const Classifier& c, ConstSpan x_t, int t, int y,
                     double scale, const Schedule& sched, Rng& rng) {
  return guided_ddpm_step(bind_eps(m, sched), bind_classifier_grad(c, sched), x_t, t, y, scale,
                          sched, rng);
}

Vec cfg_eps(const NoisePredictor& m, ConstSpan x, int t, std::optional<int> y, double scale,
            const Schedule& sched) {
  if (!m.conditional()) {
    throw ValidationError("model", "classifier-free guidance needs a conditional model");
  }
  if (!(scale >= 0.0)) throw ValidationError("scale", "guidance scale must be >= 0");
  Vec eps = predict_eps(m, x, t, y, sched);
  const Vec eps_null = predict_eps(m, x, t, std::nullopt, sched);
  for (std::size_t i = 0; i < eps.size(); ++i) eps[i] += scale * (eps[i] - eps_null[i]);
  return eps;
}

EpsFn bind_cfg_eps(const NoisePredictor& m, const Schedule& sched, std::optional<int> y, double scale) {
  return [&m, &sched, y, scale](ConstSpan x, int t) { return cfg_eps(m, x, t, y, scale, sched); };
}

std::vector<Trajectory> guided_sample(const NoisePredictor& m, const SamplerConfig& cfg,
                                      const GuidanceConfig& g, const Schedule& sched) {
  const auto dim = static_cast<std::size_t>(m.data_dim());
  switch (g.mode) {
    case GuidanceMode::kNone:
      return sample_reverse(m, cfg, sched, m.conditional() ? g.target : std::nullopt);
    case GuidanceMode::kClassifierFree:
      if (!m.conditional()) {
        throw ValidationError("model", "classifier-free guidance needs a conditional model");
      }
      if (!g.target) throw ValidationError("target", "classifier-free guidance needs a target class");
      return sample_reverse(bind_cfg_eps(m, sched, g.target, g.scale), dim, cfg, sched);
    case GuidanceMode::kClassifier: {
      if (g.classifier == nullptr) throw ValidationError("classifier", "classifier guidance needs a classifier");
      if (!g.target) throw ValidationError("target", "classifier guidance needs a target class");
      if (cfg.kind != SamplerKind::kDdpm) {
        throw ValidationError("sampler", "classifier guidance is defined for the DDPM sampler only");
      }
      if (g.classifier->data_dim() != m.data_dim()) {
        throw DimensionError("guided_sample classifier", dim, static_cast<std::size_t>(g.classifier->data_dim()));
      }
      const EpsFn eps = bind_eps(m, sched);
      const LogLikelihoodGradFn grad = bind_classifier_grad(*g.classifier, sched);
      const int y = *g.target;
      const double s = g.scale;
      return run_reverse_chains(
          [&](ConstSpan x, int t, Rng& rng) { return guided_ddpm_step(eps, grad, x, t, y, s, sched, rng); },
          dim, cfg, sched);
    }
  }
  throw ValidationError("mode", "unknown guidance mode");
}

std::string to_string(GuidanceMode mode) {
  switch (mode) {
    case GuidanceMode::kNone:
      return "none";
    case GuidanceMode::kClassifier:
      return "classifier";
    case GuidanceMode::kClassifierFree:
      return "cfg";
  }
  return "none";
}

}  // namespace difflab
