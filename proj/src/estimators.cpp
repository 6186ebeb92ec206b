#include "difflab/estimators.hpp"

#include <cmath>

#include "difflab/error.hpp"

namespace difflab {

ScalarFunctionProbe quadratic_probe() {
  return {[](double x) { return 0.5 * x * x; }, [](double x) { return x; }};
}

McEstimate mc_expectation(const ScalarSampler& draw, const std::function<double(double)>& f,
                          long samples, Rng& rng) {
  if (samples < 2) throw ValidationError("M", "must be >= 2 for a standard error");
  // Welford's update keeps the variance stable for large M.
  double mean = 0.0;
  double m2 = 0.0;
  for (long m = 0; m < samples; ++m) {
    const double v = f(draw(rng));
    const double delta = v - mean;
    mean += delta / static_cast<double>(m + 1);
    m2 += delta * (v - mean);
  }
  const double var = m2 / static_cast<double>(samples - 1);
  return {mean, std::sqrt(var / static_cast<double>(samples))};
}

std::array<double, 2> reparam_grad(std::array<double, 2> theta, long samples, Rng& rng,
                                   const ScalarFunctionProbe& probe) {
  if (samples < 1) throw ValidationError("M", "must be >= 1");
  double g1 = 0.0;
  double g2 = 0.0;
  for (long m = 0; m < samples; ++m) {
    const double y = rng.normal();
    const double slope = probe.df(theta[0] + theta[1] * y);
    g1 += slope;
    g2 += slope * y;
  }
  const double inv = 1.0 / static_cast<double>(samples);
  return {g1 * inv, g2 * inv};
}

}  // namespace difflab
