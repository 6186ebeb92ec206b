#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "difflab/forward.hpp"
#include "difflab/model.hpp"

namespace difflab {

enum class LossVariant { kSimple, kWeighted };
enum class OptimizerKind { kSgd, kMomentum };

struct TrainConfig {
  long steps = 20000;
  int batch_size = 64;
  double learning_rate = 0.05;
  double label_dropout = 0.1;
  long eval_interval = 100;
  LossVariant loss = LossVariant::kSimple;
  OptimizerKind optimizer = OptimizerKind::kSgd;
  double momentum = 0.9;

  void validate() const;
};

struct TrainReport {
  /// (step, mean batch loss over the preceding interval). The first entry is
  /// (0, loss of the first batch at the initial parameters).
  std::vector<std::pair<long, double>> loss_curve;
  std::uint64_t params_checksum = 0;
  double wall_seconds = 0.0;
};

/// FNV-1a over the IEEE-754 bit patterns of the parameters.
std::uint64_t params_checksum(std::span<const double> params);

/// Draws one noise-prediction batch exactly as `train` does.
std::vector<EpsExample> sample_eps_batch(const NoisePredictor& m, const GmmSpec& data,
                                         const Schedule& sched, const TrainConfig& cfg, Rng& rng);

/// Draws one classifier batch exactly as `train_classifier` does.
std::vector<ClassExample> sample_class_batch(const GmmSpec& data, const Schedule& sched,
                                             const TrainConfig& cfg, Rng& rng);

/// Noise-prediction training on draws from `data`.
///
/// Each step draws a batch of (x_0, t ~ U{1..T}, eps) triples, forms x_t via
/// sample_xt and takes one gradient step on the batch-mean squared error.
/// Conditional models see the true label, replaced by the null label with
/// probability cfg.label_dropout. The weighted loss variant draws t from
/// {2..T} and scales each term by eps_loss_weight(t).
TrainReport train(NoisePredictor& m, const GmmSpec& data, const Schedule& sched,
                  const TrainConfig& cfg, Rng& rng);

/// Trains p(y | x_t, t) by minimizing the negative log-likelihood on noisy
/// inputs drawn exactly as in `train`.
TrainReport train_classifier(Classifier& c, const GmmSpec& data, const Schedule& sched,
                             const TrainConfig& cfg, Rng& rng);

std::string to_string(LossVariant v);
std::string to_string(OptimizerKind k);

}  // namespace difflab
