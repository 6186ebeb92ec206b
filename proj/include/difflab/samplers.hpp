#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "difflab/forward.hpp"
#include "difflab/model.hpp"

namespace difflab {

enum class SamplerKind { kDdpm, kDdim };
enum class SigmaPolicy { kZero, kDdpmEquivalent, kExplicit };

struct SamplerConfig {
  SamplerKind kind = SamplerKind::kDdpm;
  SigmaPolicy sigma = SigmaPolicy::kZero;   // DDIM only
  std::vector<double> explicit_sigmas;      // DDIM + kExplicit; entry t-1 is sigma_t
  bool record_trajectory = false;
  int chains = 1;
  std::uint64_t seed = 0;
  std::optional<Vec> fixed_start;           // shared x_T for every chain

  /// Checks chain count and, for explicit sigmas, 0 <= sigma_t^2 <= 1 - abar_{t-1}.
  void validate(const Schedule& sched) const;
};

/// Mean of the DDPM reverse step: (x_t - (1-alpha_t)/sqrt(1-abar_t) eps_hat) / sqrt(alpha_t).
Vec ddpm_mean(const EpsFn& eps_model, ConstSpan x_t, int t, const Schedule& sched);

/// One reverse DDPM step. Noise sqrt(btilde_t) z is added only for t > 1.
Vec ddpm_step(const EpsFn& eps_model, ConstSpan x_t, int t, const Schedule& sched, Rng& rng);

/// The sigma_t that turns the DDIM step into the DDPM step (sigma_t^2 = btilde_t).
double ddim_sigma_ddpm_equiv(int t, const Schedule& sched);

/// Deterministic part of the DDIM step:
/// (x_t - sqrt(1-abar_t) eps_hat) / sqrt(alpha_t) + sqrt(1 - abar_{t-1} - sigma_t^2) eps_hat.
Vec ddim_mean(const EpsFn& eps_model, ConstSpan x_t, int t, double sigma_t, const Schedule& sched);

/// One DDIM step: predicted x_0 part + direction toward x_t + sigma_t z.
/// z is drawn only when sigma_t > 0 and t > 1.
Vec ddim_step(const EpsFn& eps_model, ConstSpan x_t, int t, double sigma_t, const Schedule& sched,
              Rng& rng);

/// sigma_t under the configured policy.
double ddim_sigma(const SamplerConfig& cfg, int t, const Schedule& sched);

/// Generic reverse step x_t -> x_{t-1}.
using ReverseStepFn = std::function<Vec(ConstSpan x_t, int t, Rng& rng)>;

/// Runs `cfg.chains` independent chains from t = T down to 0. Chain i uses
/// Rng(cfg.seed, i): x_T is drawn from it first (unless cfg.fixed_start is
/// set), then every step consumes it in order. Without trajectory recording
/// each result holds only the final (0, x_0) state.
std::vector<Trajectory> run_reverse_chains(const ReverseStepFn& step, std::size_t dim,
                                           const SamplerConfig& cfg, const Schedule& sched);

std::vector<Trajectory> sample_reverse(const EpsFn& eps_model, std::size_t dim,
                                       const SamplerConfig& cfg, const Schedule& sched);
std::vector<Trajectory> sample_reverse(const NoisePredictor& m, const SamplerConfig& cfg,
                                       const Schedule& sched, std::optional<int> y = std::nullopt);

std::string to_string(SamplerKind kind);
std::string to_string(SigmaPolicy policy);

}  // namespace difflab
