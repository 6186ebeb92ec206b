#pragma once

// Closed-form noise predictor and classifier for a 1-D Gaussian mixture.
// Under q(x_t) = sum_k w_k N(a mu_k, a^2 v_k + 1 - a^2) with a = sqrt(abar_t),
// the optimal eps_hat is -sqrt(1 - abar_t) * d/dx log q(x_t), and the Bayes
// classifier is the posterior mass of the components carrying label y.

#include <cmath>
#include <optional>
#include <vector>

#include "difflab/forward.hpp"
#include "difflab/guidance.hpp"
#include "difflab/model.hpp"
#include "oracles.hpp"

namespace difflab::oracle {

struct MixtureTerms {
  std::vector<double> log_w;  // log weight + log density per component
  std::vector<double> score;  // d/dx log N_k(x)
};

inline MixtureTerms noisy_mixture_terms(const GmmSpec& spec, double x, int t, const Schedule& s) {
  const double a = std::sqrt(s.alpha_bar(t));
  MixtureTerms out;
  for (std::size_t k = 0; k < spec.components(); ++k) {
    const double mean = a * spec.means[k][0];
    const double var = a * a * spec.vars[k][0] + (1.0 - a * a);
    out.log_w.push_back(std::log(spec.weights[k]) + normal_log_density(x, mean, var));
    out.score.push_back(-(x - mean) / var);
  }
  return out;
}

/// Responsibility-weighted score over the components selected by `keep`.
template <typename Keep>
double weighted_score(const MixtureTerms& m, Keep keep) {
  std::vector<double> lw;
  for (std::size_t k = 0; k < m.log_w.size(); ++k) {
    if (keep(k)) lw.push_back(m.log_w[k]);
  }
  const double norm = log_sum_exp(lw);
  double acc = 0.0;
  for (std::size_t k = 0; k < m.log_w.size(); ++k) {
    if (keep(k)) acc += std::exp(m.log_w[k] - norm) * m.score[k];
  }
  return acc;
}

/// Optimal eps_hat(x_t, t[, y]) for the mixture; y restricts to that class.
inline EpsFn gmm_optimal_eps(const GmmSpec& spec, const Schedule& s, std::optional<int> y = std::nullopt) {
  return [spec, &s, y](ConstSpan x, int t) {
    const MixtureTerms m = noisy_mixture_terms(spec, x[0], t, s);
    const double score = weighted_score(m, [&](std::size_t k) { return !y || spec.labels[k] == *y; });
    return Vec{-std::sqrt(1.0 - s.alpha_bar(t)) * score};
  };
}

/// Gradient in x of the Bayes log p(y | x_t).
inline LogLikelihoodGradFn gmm_bayes_classifier_grad(const GmmSpec& spec, const Schedule& s) {
  return [spec, &s](ConstSpan x, int t, int y) {
    const MixtureTerms m = noisy_mixture_terms(spec, x[0], t, s);
    const double in_class = weighted_score(m, [&](std::size_t k) { return spec.labels[k] == y; });
    const double all = weighted_score(m, [](std::size_t) { return true; });
    return Vec{in_class - all};
  };
}

}  // namespace difflab::oracle
