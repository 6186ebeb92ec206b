#pragma once

#include <functional>
#include <optional>

#include "difflab/samplers.hpp"

namespace difflab {

enum class GuidanceMode { kNone, kClassifier, kClassifierFree };

struct GuidanceConfig {
  GuidanceMode mode = GuidanceMode::kNone;
  double scale = 0.0;
  std::optional<int> target;
  const Classifier* classifier = nullptr;  // classifier mode only; not owned
};

/// Gradient of log p(y | x, t) with respect to x.
using LogLikelihoodGradFn = std::function<Vec(ConstSpan x, int t, int y)>;

LogLikelihoodGradFn bind_classifier_grad(const Classifier& c, const Schedule& sched);

/// Mean of the classifier-guided reverse Gaussian:
/// mu_hat + s * btilde_t * grad log p(y | x)|_{x = mu_hat}, mu_hat the unguided DDPM mean.
Vec guided_ddpm_mean(const EpsFn& eps_model, const LogLikelihoodGradFn& grad, ConstSpan x_t, int t,
                     int y, double scale, const Schedule& sched);

/// Draws from N(guided mean, btilde_t I); no noise at t = 1.
Vec guided_ddpm_step(const EpsFn& eps_model, const LogLikelihoodGradFn& grad, ConstSpan x_t, int t,
                     int y, double scale, const Schedule& sched, Rng& rng);
Vec guided_ddpm_step(const NoisePredictor& m, const Classifier& c, ConstSpan x_t, int t, int y,
                     double scale, const Schedule& sched, Rng& rng);

/// eps_hat(x, y, t) + s * (eps_hat(x, y, t) - eps_hat(x, null, t)).
Vec cfg_eps(const NoisePredictor& m, ConstSpan x, int t, std::optional<int> y, double scale,
            const Schedule& sched);

/// cfg_eps bound into an EpsFn for use by either sampler.
EpsFn bind_cfg_eps(const NoisePredictor& m, const Schedule& sched, std::optional<int> y, double scale);

/// Reverse sampling with guidance layered over the configured sampler.
/// Classifier guidance is defined for DDPM only.
std::vector<Trajectory> guided_sample(const NoisePredictor& m, const SamplerConfig& cfg,
                                      const GuidanceConfig& g, const Schedule& sched);

std::string to_string(GuidanceMode mode);

}  // namespace difflab
