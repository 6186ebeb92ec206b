#pragma once

#include <span>
#include <vector>

#include "difflab/forward.hpp"

namespace difflab {

/// Exact 1-Wasserstein distance between two 1-D empirical distributions,
/// computed as the integral of |F_a^-1(u) - F_b^-1(u)| over u in [0, 1].
/// For equal sizes this is the mean absolute difference of sorted samples.
double wasserstein1_1d(std::span<const double> a, std::span<const double> b);

/// Fraction of samples nearest (Euclidean) to each component mean. Only a
/// faithful mode partition when components are well separated.
std::vector<double> mode_masses(std::span<const Vec> samples, const GmmSpec& spec);

struct MetricReport {
  double wasserstein1 = 0.0;
  std::vector<double> mode_masses;
  Vec mean;
  Vec stddev;
  std::size_t count = 0;
};

/// Summary of `samples` (1-D for the Wasserstein term) against reference draws.
MetricReport evaluate_samples(std::span<const Vec> samples, std::span<const Vec> reference,
                              const GmmSpec& spec);

/// First coordinate of every vector.
std::vector<double> first_coordinate(std::span<const Vec> samples);

}  // namespace difflab
