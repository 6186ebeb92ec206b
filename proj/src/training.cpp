#include "difflab/training.hpp"

#include <bit>
#include <chrono>
#include <cmath>

#include "difflab/losses.hpp"

namespace difflab {

namespace {

class Optimizer {
 public:
  Optimizer(const TrainConfig& cfg, std::size_t n) : cfg_(cfg) {
    if (cfg.optimizer == OptimizerKind::kMomentum) velocity_.assign(n, 0.0);
  }

  void apply(std::span<double> params, ConstSpan grad) {
    const double eta = cfg_.learning_rate;
    if (cfg_.optimizer == OptimizerKind::kSgd) {
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= eta * grad[i];
      return;
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      velocity_[i] = cfg_.momentum * velocity_[i] + grad[i];
      params[i] -= eta * velocity_[i];
    }
  }

 private:
  const TrainConfig& cfg_;
  Vec velocity_;
};

/// Accumulates batch losses into the interval means of the loss curve.
class CurveRecorder {
 public:
  explicit CurveRecorder(long interval) : interval_(interval) {}

  void initial(double loss) { curve_.emplace_back(0, loss); }

  void add(long step, double loss) {
    if (!std::isfinite(loss)) {
      throw Error("training diverged: nonfinite loss at step " + std::to_string(step));
    }
    sum_ += loss;
    ++count_;
    if (step % interval_ == 0) flush(step);
  }

  std::vector<std::pair<long, double>> finish(long last_step) {
    if (count_ > 0) flush(last_step);
    return std::move(curve_);
  }

 private:
  void flush(long step) {
    curve_.emplace_back(step, sum_ / static_cast<double>(count_));
    sum_ = 0.0;
    count_ = 0;
  }

  long interval_;
  double sum_ = 0.0;
  long count_ = 0;
  std::vector<std::pair<long, double>> curve_;
};

int draw_time(const Schedule& sched, bool skip_first, Rng& rng) {
  const int lo = skip_first ? 2 : 1;
  return lo + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(sched.steps() - lo + 1)));
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

void TrainConfig::validate() const {
  if (steps < 0) throw ValidationError("steps", "must be >= 0");
  if (batch_size < 1) throw ValidationError("batch", "must be >= 1");
  if (!(learning_rate >= 0.0)) throw ValidationError("eta", "must be >= 0");
  if (!(label_dropout >= 0.0 && label_dropout <= 1.0)) {
    throw ValidationError("p_drop", "must lie in [0, 1]");
  }
  if (eval_interval < 1) throw ValidationError("eval_interval", "must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("momentum", "must lie in [0, 1)");
}

std::uint64_t params_checksum(std::span<const double> params) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (double v : params) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= bits & 0xffu;
      h *= 0x100000001b3ull;
      bits >>= 8;
    }
  }
  return h;
}

std::vector<EpsExample> sample_eps_batch(const NoisePredictor& m, const GmmSpec& data,
                                         const Schedule& sched, const TrainConfig& cfg, Rng& rng) {
  const bool weighted = cfg.loss == LossVariant::kWeighted;
  std::vector<EpsExample> batch(static_cast<std::size_t>(cfg.batch_size));
  for (EpsExample& ex : batch) {
    LabeledSample x0 = gmm_sample(data, rng);
    ex.t = draw_time(sched, weighted, rng);
    NoisySample noisy = sample_xt(x0.x, ex.t, sched, rng);
    ex.x_t = std::move(noisy.x_t);
    ex.eps = std::move(noisy.eps);
    ex.weight = weighted ? eps_loss_weight(ex.t, sched) : 1.0;
    if (m.conditional() && !rng.bernoulli(cfg.label_dropout)) ex.y = x0.label;
  }
  return batch;
}

std::vector<ClassExample> sample_class_batch(const GmmSpec& data, const Schedule& sched,
                                             const TrainConfig& cfg, Rng& rng) {
  std::vector<ClassExample> batch(static_cast<std::size_t>(cfg.batch_size));
  for (ClassExample& ex : batch) {
    LabeledSample x0 = gmm_sample(data, rng);
    ex.t = draw_time(sched, false, rng);
    ex.x_t = sample_xt(x0.x, ex.t, sched, rng).x_t;
    ex.y = x0.label.value_or(0);
  }
  return batch;
}

TrainReport train(NoisePredictor& m, const GmmSpec& data, const Schedule& sched,
                  const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  data.validate();
  if (static_cast<int>(data.dim()) != m.data_dim()) {
    throw DimensionError("train data", static_cast<std::size_t>(m.data_dim()), data.dim());
  }
  if (m.conditional()) {
    if (!data.labeled()) throw ValidationError("data", "conditional training needs labeled data");
    if (data.num_classes() > m.num_classes()) {
      throw ValidationError("data", "data has more classes than the model");
    }
  }
  const bool weighted = cfg.loss == LossVariant::kWeighted;
  if (weighted && sched.steps() < 2) throw ValidationError("loss", "weighted loss needs T >= 2");

  const auto start = std::chrono::steady_clock::now();
  std::vector<EpsExample> batch = sample_eps_batch(m, data, sched, cfg, rng);

  Optimizer opt(cfg, m.net().param_count());
  CurveRecorder curve(cfg.eval_interval);
  for (long step = 1;; ++step) {
    const LossGrad lg = loss_and_grad(m, batch, sched);
    if (step == 1) curve.initial(lg.loss);
    if (step > cfg.steps) break;
    if (cfg.learning_rate != 0.0) opt.apply(m.net().params(), lg.grad);
    curve.add(step, lg.loss);
    if (step < cfg.steps) batch = sample_eps_batch(m, data, sched, cfg, rng);
  }

  TrainReport report;
  report.loss_curve = curve.finish(cfg.steps);
  report.params_checksum = params_checksum(m.net().params());
  report.wall_seconds = seconds_since(start);
  return report;
}

TrainReport train_classifier(Classifier& c, const GmmSpec& data, const Schedule& sched,
                             const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  data.validate();
  if (!data.labeled()) throw ValidationError("data", "classifier training needs labeled data");
  if (data.num_classes() > c.num_classes()) {
    throw ValidationError("data", "data has more classes than the classifier");
  }
  if (static_cast<int>(data.dim()) != c.data_dim()) {
    throw DimensionError("train_classifier data", static_cast<std::size_t>(c.data_dim()), data.dim());
  }

  const auto start = std::chrono::steady_clock::now();
  std::vector<ClassExample> batch = sample_class_batch(data, sched, cfg, rng);

  Optimizer opt(cfg, c.net().param_count());
  CurveRecorder curve(cfg.eval_interval);
  for (long step = 1;; ++step) {
    const LossGrad lg = classifier_loss_and_grad(c, batch, sched);
    if (step == 1) curve.initial(lg.loss);
    if (step > cfg.steps) break;
    if (cfg.learning_rate != 0.0) opt.apply(c.net().params(), lg.grad);
    curve.add(step, lg.loss);
    if (step < cfg.steps) batch = sample_class_batch(data, sched, cfg, rng);
  }

  TrainReport report;
  report.loss_curve = curve.finish(cfg.steps);
  report.params_checksum = params_checksum(c.net().params());
  report.wall_seconds = seconds_since(start);
  return report;
}

std::string to_string(LossVariant v) { return v == LossVariant::kSimple ? "simple" : "weighted"; }

std::string to_string(OptimizerKind k) { return k == OptimizerKind::kSgd ? "sgd" : "momentum"; }

}  // namespace difflab
