#include "difflab/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace difflab {

double wasserstein1_1d(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ValidationError("samples", "wasserstein1_1d needs nonempty inputs");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  if (sa.size() == sb.size()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < sa.size(); ++i) acc += std::abs(sa[i] - sb[i]);
    return acc / static_cast<double>(sa.size());
  }
  // Merge the breakpoints i/n and j/m of the two step quantile functions,
  // comparing in integer arithmetic to avoid drift.
  const std::size_t n = sa.size();
  const std::size_t m = sb.size();
  std::size_t i = 0;
  std::size_t j = 0;
  double acc = 0.0;
  std::size_t prev = 0;  // current position in units of 1/(n*m)
  while (i < n && j < m) {
    const std::size_t next_a = (i + 1) * m;
    const std::size_t next_b = (j + 1) * n;
    const std::size_t next = std::min(next_a, next_b);
    acc += static_cast<double>(next - prev) * std::abs(sa[i] - sb[j]);
    prev = next;
    if (next_a == next) ++i;
    if (next_b == next) ++j;
  }
  return acc / (static_cast<double>(n) * static_cast<double>(m));
}

std::vector<double> mode_masses(std::span<const Vec> samples, const GmmSpec& spec) {
  if (samples.empty()) throw ValidationError("samples", "mode_masses needs samples");
  std::vector<double> counts(spec.components(), 0.0);
  for (const Vec& x : samples) {
    require_same_dim("mode_masses", spec.dim(), x.size());
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < spec.components(); ++k) {
      double dist = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = x[i] - spec.means[k][i];
        dist += r * r;
      }
      if (dist < best_dist) {
        best_dist = dist;
        best = k;
      }
    }
    counts[best] += 1.0;
  }
  for (double& c : counts) c /= static_cast<double>(samples.size());
  return counts;
}

std::vector<double> first_coordinate(std::span<const Vec> samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const Vec& x : samples) out.push_back(x.at(0));
  return out;
}

MetricReport evaluate_samples(std::span<const Vec> samples, std::span<const Vec> reference,
                              const GmmSpec& spec) {
  MetricReport report;
  report.count = samples.size();
  report.wasserstein1 = wasserstein1_1d(first_coordinate(samples), first_coordinate(reference));
  report.mode_masses = mode_masses(samples, spec);
  const std::size_t d = samples.front().size();
  report.mean.assign(d, 0.0);
  report.stddev.assign(d, 0.0);
  for (const Vec& x : samples) {
    for (std::size_t i = 0; i < d; ++i) report.mean[i] += x[i];
  }
  for (double& v : report.mean) v /= static_cast<double>(samples.size());
  for (const Vec& x : samples) {
    for (std::size_t i = 0; i < d; ++i) {
      const double r = x[i] - report.mean[i];
      report.stddev[i] += r * r;
    }
  }
  for (double& v : report.stddev) v = std::sqrt(v / static_cast<double>(samples.size()));
  return report;
}

}  // namespace difflab
