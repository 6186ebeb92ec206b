#pragma once

#include <array>
#include <functional>

#include "difflab/rng.hpp"

namespace difflab {

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Scalar test function f together with its derivative f'.
struct ScalarFunctionProbe {
  std::function<double(double)> f;
  std::function<double(double)> df;
};

/// f(x) = x^2 / 2, f'(x) = x.
ScalarFunctionProbe quadratic_probe();

using ScalarSampler = std::function<double(Rng&)>;

/// Sample mean of f over `samples` draws and its standard error
/// (sample standard deviation / sqrt(samples)). Needs samples >= 2.
McEstimate mc_expectation(const ScalarSampler& draw, const std::function<double(double)>& f,
                          long samples, Rng& rng);

/// Reparameterization-trick estimate of grad_theta E_{X ~ N(theta_1, theta_2^2)}[f(X)]
/// using X = theta_1 + theta_2 * Y, Y ~ N(0, 1):
///   (1/M) sum_m f'(theta_1 + theta_2 y_m) * (1, y_m).
/// With the quadratic probe this is (1/M) sum (theta_1 + theta_2 y, y (theta_1 + theta_2 y)).
std::array<double, 2> reparam_grad(std::array<double, 2> theta, long samples, Rng& rng,
                                   const ScalarFunctionProbe& probe = quadratic_probe());

}  // namespace difflab
