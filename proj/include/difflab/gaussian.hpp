#pragma once

#include "difflab/rng.hpp"
#include "difflab/types.hpp"

namespace difflab {

/// Gaussian with diagonal covariance. A zero variance entry denotes a point
/// mass in that coordinate; sampling returns the mean there.
struct DiagGaussian {
  Vec mean;
  Vec var;

  DiagGaussian() = default;
  DiagGaussian(Vec mean_in, Vec var_in);

  /// Isotropic Gaussian N(mean, variance * I).
  static DiagGaussian isotropic(Vec mean_in, double variance);
  static DiagGaussian standard(std::size_t dim);

  std::size_t dim() const noexcept { return mean.size(); }
};

/// -1/2 * sum_i [log(2 pi var_i) + (x_i - mean_i)^2 / var_i].
double log_pdf(const DiagGaussian& g, ConstSpan x);

/// mean + sqrt(var) * z with z ~ N(0, I); draws exactly dim() normals.
Vec sample(const DiagGaussian& g, Rng& rng);

/// KL(q || p) in closed form. Requires strictly positive variances.
double kl_closed_form(const DiagGaussian& q, const DiagGaussian& p);

/// Monte-Carlo KL(q || p) from `samples` draws of q.
double kl_mc(const DiagGaussian& q, const DiagGaussian& p, long samples, Rng& rng);

}  // namespace difflab
