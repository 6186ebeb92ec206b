#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "difflab/rng.hpp"
#include "difflab/schedule.hpp"

namespace difflab {

/// Fully connected network: tanh on every hidden layer, affine output layer.
///
/// Parameters live in one flat array, layer by layer, each layer stored as
/// its weight matrix (row-major, out x in) followed by its bias vector.
class Mlp {
 public:
  /// Activations recorded by a forward pass, consumed by `backward`.
  struct Tape {
    std::vector<Vec> layers;  // layers[0] is the input, layers.back() the output
  };

  Mlp() = default;
  /// `widths` = {input, hidden..., output}; every width must be >= 1.
  explicit Mlp(std::vector<int> widths);

  const std::vector<int>& widths() const noexcept { return widths_; }
  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  std::size_t param_count() const noexcept { return params_.size(); }

  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
  void initialize(Rng& rng);

  Vec forward(ConstSpan input) const;
  Vec forward(ConstSpan input, Tape& tape) const;

  /// Backpropagates dL/d(output). Adds dL/d(params) into `grad` and, when
  /// `d_input` is non-null, writes dL/d(input) there.
  void backward(const Tape& tape, ConstSpan d_output, std::span<double> grad,
                Vec* d_input = nullptr) const;

  static std::size_t param_count_for(std::span<const int> widths);

 private:
  std::vector<int> widths_;
  Vec params_;
};

/// Shape of the learnable function: data dimension plus hidden widths.
struct Architecture {
  int data_dim = 1;
  std::vector<int> hidden = {64, 64};

  bool operator==(const Architecture&) const = default;
};

/// Number of time-encoding features appended to the input:
/// (t/T, sin(2 pi t/T), cos(2 pi t/T), sqrt(1 - abar_t)).
inline constexpr int kTimeFeatures = 4;

/// Noise predictor eps_hat(x_t, t[, y]).
///
/// With `num_classes` = K > 0 the input also carries a one-hot label of
/// length K + 1 whose last slot encodes the null label.
class NoisePredictor {
 public:
  NoisePredictor() = default;
  NoisePredictor(Architecture arch, int num_classes);

  const Architecture& arch() const noexcept { return arch_; }
  int num_classes() const noexcept { return num_classes_; }
  bool conditional() const noexcept { return num_classes_ > 0; }
  int data_dim() const noexcept { return arch_.data_dim; }

  Mlp& net() noexcept { return net_; }
  const Mlp& net() const noexcept { return net_; }

 private:
  Architecture arch_;
  int num_classes_ = 0;
  Mlp net_;
};

/// Probabilistic classifier p(y | x_t, t) with a K-way log-softmax head.
class Classifier {
 public:
  Classifier() = default;
  Classifier(Architecture arch, int num_classes);

  const Architecture& arch() const noexcept { return arch_; }
  int num_classes() const noexcept { return num_classes_; }
  int data_dim() const noexcept { return arch_.data_dim; }

  Mlp& net() noexcept { return net_; }
  const Mlp& net() const noexcept { return net_; }

 private:
  Architecture arch_;
  int num_classes_ = 2;
  Mlp net_;
};

/// Scaled-uniform initialization. For conditional models the first-layer
/// weights on the label one-hot start at zero.
NoisePredictor init_noise_predictor(const Architecture& arch, int num_classes, Rng& rng);
Classifier init_classifier(const Architecture& arch, int num_classes, Rng& rng);

/// Network input for (x, t[, y]). `label_slots` is 0 for unconditional
/// inputs; otherwise K + 1 and `y` = nullopt selects the null slot.
Vec encode_input(ConstSpan x, int t, std::optional<int> y, int label_slots, const Schedule& sched);

/// Deterministic forward pass. Unconditional models reject a label;
/// conditional models route nullopt to the null slot.
Vec predict_eps(const NoisePredictor& m, ConstSpan x, int t, std::optional<int> y,
                const Schedule& sched);

/// One training example for the noise predictor.
struct EpsExample {
  Vec x_t;
  int t = 1;
  std::optional<int> y;
  Vec eps;
  double weight = 1.0;
};

struct LossGrad {
  double loss = 0.0;
  Vec grad;
};

/// Mean over the batch of weight * ||eps_hat - eps||^2 and its exact gradient.
LossGrad loss_and_grad(const NoisePredictor& m, std::span<const EpsExample> batch,
                       const Schedule& sched);

Vec classifier_log_probs(const Classifier& c, ConstSpan x, int t, const Schedule& sched);

/// Gradient of log p(y | x, t) with respect to x.
Vec classifier_grad_x(const Classifier& c, ConstSpan x, int t, int y, const Schedule& sched);

struct ClassExample {
  Vec x_t;
  int t = 1;
  int y = 0;
};

/// Mean negative log-likelihood over the batch and its gradient.
LossGrad classifier_loss_and_grad(const Classifier& c, std::span<const ClassExample> batch,
                                  const Schedule& sched);

/// A noise prediction as a plain function of (x_t, t). Samplers, guidance and
/// the variational bound accept any such function, which lets tests inject
/// oracle or stub predictors.
using EpsFn = std::function<Vec(ConstSpan x, int t)>;

/// Binds a model, a schedule and an optional label into an EpsFn. The model
/// and schedule must outlive the returned function.
EpsFn bind_eps(const NoisePredictor& m, const Schedule& sched, std::optional<int> y = std::nullopt);

}  // namespace difflab
