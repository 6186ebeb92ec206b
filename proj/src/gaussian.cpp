#include "difflab/gaussian.hpp"

#include <cmath>
#include <numbers>

namespace difflab {

DiagGaussian::DiagGaussian(Vec mean_in, Vec var_in) : mean(std::move(mean_in)), var(std::move(var_in)) {
  require_same_dim("DiagGaussian", mean.size(), var.size());
  for (double v : var) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ValidationError("var", "variances must be finite and nonnegative");
    }
  }
}

DiagGaussian DiagGaussian::isotropic(Vec mean_in, double variance) {
  Vec var(mean_in.size(), variance);
  return DiagGaussian(std::move(mean_in), std::move(var));
}

DiagGaussian DiagGaussian::standard(std::size_t dim) { return isotropic(Vec(dim, 0.0), 1.0); }

double log_pdf(const DiagGaussian& g, ConstSpan x) {
  require_same_dim("log_pdf", g.dim(), x.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = x[i] - g.mean[i];
    acc += std::log(2.0 * std::numbers::pi * g.var[i]) + r * r / g.var[i];
  }
  return -0.5 * acc;
}

Vec sample(const DiagGaussian& g, Rng& rng) {
  Vec out(g.dim());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double z = rng.normal();
    out[i] = g.var[i] == 0.0 ? g.mean[i] : g.mean[i] + std::sqrt(g.var[i]) * z;
  }
  return out;
}

double kl_closed_form(const DiagGaussian& q, const DiagGaussian& p) {
  require_same_dim("kl_closed_form", q.dim(), p.dim());
  double acc = 0.0;
  for (std::size_t i = 0; i < q.dim(); ++i) {
    if (!(q.var[i] > 0.0) || !(p.var[i] > 0.0)) {
      throw ValidationError("var", "kl_closed_form requires positive variances");
    }
    const double ratio = q.var[i] / p.var[i];
    const double diff = q.mean[i] - p.mean[i];
    // log(var_p/var_q) - 1 + var_q/var_p is >= 0 per coordinate.
    acc += -std::log(ratio) - 1.0 + ratio + diff * diff / p.var[i];
  }
  return 0.5 * acc;
}

double kl_mc(const DiagGaussian& q, const DiagGaussian& p, long samples, Rng& rng) {
  if (samples < 1) throw ValidationError("M", "must be >= 1");
  require_same_dim("kl_mc", q.dim(), p.dim());
  double acc = 0.0;
  for (long m = 0; m < samples; ++m) {
    const Vec x = sample(q, rng);
    acc += log_pdf(q, x) - log_pdf(p, x);
  }
  return acc / static_cast<double>(samples);
}

}  // namespace difflab
