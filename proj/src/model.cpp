#include "difflab/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace difflab {

namespace {

std::vector<int> widths_for(const Architecture& arch, int input_dim, int output_dim) {
  std::vector<int> widths;
  widths.push_back(input_dim);
  widths.insert(widths.end(), arch.hidden.begin(), arch.hidden.end());
  widths.push_back(output_dim);
  return widths;
}

void validate_arch(const Architecture& arch) {
  if (arch.data_dim < 1) throw ValidationError("data_dim", "must be >= 1");
  for (int w : arch.hidden) {
    if (w < 1) throw ValidationError("hidden", "layer widths must be >= 1");
  }
}

void log_softmax_inplace(Vec& logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double acc = 0.0;
  for (double v : logits) acc += std::exp(v - top);
  const double log_norm = top + std::log(acc);
  for (double& v : logits) v -= log_norm;
}

void check_label(int y, int num_classes) {
  if (y < 0 || y >= num_classes) {
    throw ValidationError("y", "label " + std::to_string(y) + " outside [0, " +
                                   std::to_string(num_classes) + ")");
  }
}

}  // namespace

Mlp::Mlp(std::vector<int> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw ValidationError("widths", "need input and output widths");
  for (int w : widths_) {
    if (w < 1) throw ValidationError("widths", "every width must be >= 1");
  }
  params_.assign(param_count_for(widths_), 0.0);
}

std::size_t Mlp::param_count_for(std::span<const int> widths) {
  std::size_t count = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    count += static_cast<std::size_t>(widths[l]) * widths[l + 1] + widths[l + 1];
  }
  return count;
}

void Mlp::initialize(Rng& rng) {
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    const std::size_t in = widths_[l];
    const std::size_t out = widths_[l + 1];
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    for (std::size_t i = 0; i < in * out; ++i) params_[offset + i] = scale * (2.0 * rng.uniform() - 1.0);
    offset += in * out;
    std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(offset), out, 0.0);
    offset += out;
  }
}

Vec Mlp::forward(ConstSpan input) const {
  Tape tape;
  return forward(input, tape);
}

Vec Mlp::forward(ConstSpan input, Tape& tape) const {
  require_same_dim("Mlp::forward", static_cast<std::size_t>(input_dim()), input.size());
  const std::size_t n_layers = widths_.size() - 1;
  tape.layers.resize(n_layers + 1);
  tape.layers[0].assign(input.begin(), input.end());
  const double* p = params_.data();
  for (std::size_t l = 0; l < n_layers; ++l) {
    const std::size_t in = widths_[l];
    const std::size_t out = widths_[l + 1];
    const Vec& a = tape.layers[l];
    Vec& z = tape.layers[l + 1];
    z.resize(out);
    const double* bias = p + in * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double* row = p + o * in;
      double acc = bias[o];
      for (std::size_t i = 0; i < in; ++i) acc += row[i] * a[i];
      z[o] = l + 1 < n_layers ? std::tanh(acc) : acc;
    }
    p += in * out + out;
  }
  return tape.layers.back();
}

void Mlp::backward(const Tape& tape, ConstSpan d_output, std::span<double> grad,
                   Vec* d_input) const {
  require_same_dim("Mlp::backward", static_cast<std::size_t>(output_dim()), d_output.size());
  require_same_dim("Mlp::backward grad", params_.size(), grad.size());
  const std::size_t n_layers = widths_.size() - 1;
  Vec delta(d_output.begin(), d_output.end());
  Vec d_prev;
  std::size_t offset = params_.size();
  for (std::size_t l = n_layers; l-- > 0;) {
    const std::size_t in = widths_[l];
    const std::size_t out = widths_[l + 1];
    offset -= in * out + out;
    const double* w = params_.data() + offset;
    double* gw = grad.data() + offset;
    double* gb = gw + in * out;
    const Vec& a = tape.layers[l];
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      double* grow = gw + o * in;
      for (std::size_t i = 0; i < in; ++i) grow[i] += d * a[i];
      gb[o] += d;
    }
    if (l == 0 && d_input == nullptr) break;
    d_prev.assign(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) d_prev[i] += row[i] * d;
    }
    if (l > 0) {
      // a is tanh output: d tanh = 1 - a^2.
      for (std::size_t i = 0; i < in; ++i) d_prev[i] *= 1.0 - a[i] * a[i];
    }
    delta.swap(d_prev);
  }
  if (d_input != nullptr) *d_input = std::move(delta);
}

NoisePredictor::NoisePredictor(Architecture arch, int num_classes)
    : arch_(std::move(arch)), num_classes_(num_classes) {
  validate_arch(arch_);
  if (num_classes_ < 0) throw ValidationError("num_classes", "must be >= 0");
  const int label_slots = num_classes_ > 0 ? num_classes_ + 1 : 0;
  net_ = Mlp(widths_for(arch_, arch_.data_dim + kTimeFeatures + label_slots, arch_.data_dim));
}

Classifier::Classifier(Architecture arch, int num_classes)
    : arch_(std::move(arch)), num_classes_(num_classes) {
  validate_arch(arch_);
  if (num_classes_ < 2) throw ValidationError("num_classes", "classifier needs >= 2 classes");
  net_ = Mlp(widths_for(arch_, arch_.data_dim + kTimeFeatures, num_classes_));
}

NoisePredictor init_noise_predictor(const Architecture& arch, int num_classes, Rng& rng) {
  NoisePredictor m(arch, num_classes);
  m.net().initialize(rng);
  if (m.conditional()) {
    // Label columns of the first layer start at zero: the initial model ignores
    // y, and a label that never appears in training keeps having no effect.
    const int in = m.net().input_dim();
    const int out = m.net().widths()[1];
    const int first_label = m.data_dim() + kTimeFeatures;
    auto w = m.net().params();
    for (int r = 0; r < out; ++r) {
      for (int c = first_label; c < in; ++c) w[static_cast<std::size_t>(r) * in + c] = 0.0;
    }
  }
  return m;
}

Classifier init_classifier(const Architecture& arch, int num_classes, Rng& rng) {
  Classifier c(arch, num_classes);
  c.net().initialize(rng);
  return c;
}

Vec encode_input(ConstSpan x, int t, std::optional<int> y, int label_slots, const Schedule& sched) {
  sched.check_time(t);
  Vec in;
  in.reserve(x.size() + kTimeFeatures + static_cast<std::size_t>(label_slots));
  in.insert(in.end(), x.begin(), x.end());
  const double phase = static_cast<double>(t) / sched.steps();
  in.push_back(phase);
  in.push_back(std::sin(2.0 * std::numbers::pi * phase));
  in.push_back(std::cos(2.0 * std::numbers::pi * phase));
  in.push_back(std::sqrt(1.0 - sched.alpha_bar(t)));
  if (label_slots > 0) {
    const std::size_t first = in.size();
    in.resize(first + static_cast<std::size_t>(label_slots), 0.0);
    const int slot = y.has_value() ? *y : label_slots - 1;
    in[first + static_cast<std::size_t>(slot)] = 1.0;
  } else if (y.has_value()) {
    throw ValidationError("y", "unconditional model does not accept a label");
  }
  return in;
}

namespace {

Vec encode_for(const NoisePredictor& m, ConstSpan x, int t, std::optional<int> y,
               const Schedule& sched) {
  require_same_dim("predict_eps", static_cast<std::size_t>(m.data_dim()), x.size());
  if (y.has_value()) {
    if (!m.conditional()) throw ValidationError("y", "unconditional model does not accept a label");
    check_label(*y, m.num_classes());
  }
  return encode_input(x, t, y, m.conditional() ? m.num_classes() + 1 : 0, sched);
}

}  // namespace

Vec predict_eps(const NoisePredictor& m, ConstSpan x, int t, std::optional<int> y,
                const Schedule& sched) {
  return m.net().forward(encode_for(m, x, t, y, sched));
}

EpsFn bind_eps(const NoisePredictor& m, const Schedule& sched, std::optional<int> y) {
  return [&m, &sched, y](ConstSpan x, int t) { return predict_eps(m, x, t, y, sched); };
}

LossGrad loss_and_grad(const NoisePredictor& m, std::span<const EpsExample> batch,
                       const Schedule& sched) {
  if (batch.empty()) throw ValidationError("batch", "must be nonempty");
  LossGrad out{0.0, Vec(m.net().param_count(), 0.0)};
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  Mlp::Tape tape;
  Vec d_out(static_cast<std::size_t>(m.data_dim()));
  for (const EpsExample& ex : batch) {
    require_same_dim("loss_and_grad eps", static_cast<std::size_t>(m.data_dim()), ex.eps.size());
    const Vec eps_hat = m.net().forward(encode_for(m, ex.x_t, ex.t, ex.y, sched), tape);
    double sq = 0.0;
    for (std::size_t i = 0; i < eps_hat.size(); ++i) {
      const double r = eps_hat[i] - ex.eps[i];
      sq += r * r;
      d_out[i] = 2.0 * ex.weight * r * inv_n;
    }
    out.loss += ex.weight * sq * inv_n;
    m.net().backward(tape, d_out, out.grad);
  }
  return out;
}

Vec classifier_log_probs(const Classifier& c, ConstSpan x, int t, const Schedule& sched) {
  require_same_dim("classifier_log_probs", static_cast<std::size_t>(c.data_dim()), x.size());
  Vec logits = c.net().forward(encode_input(x, t, std::nullopt, 0, sched));
  log_softmax_inplace(logits);
  return logits;
}

Vec classifier_grad_x(const Classifier& c, ConstSpan x, int t, int y, const Schedule& sched) {
  require_same_dim("classifier_grad_x", static_cast<std::size_t>(c.data_dim()), x.size());
  check_label(y, c.num_classes());
  Mlp::Tape tape;
  Vec log_probs = c.net().forward(encode_input(x, t, std::nullopt, 0, sched), tape);
  log_softmax_inplace(log_probs);
  // d log softmax_y / d logits = onehot(y) - softmax.
  Vec d_logits(log_probs.size());
  for (std::size_t k = 0; k < d_logits.size(); ++k) {
    d_logits[k] = (static_cast<int>(k) == y ? 1.0 : 0.0) - std::exp(log_probs[k]);
  }
  Vec scratch(c.net().param_count(), 0.0);
  Vec d_input;
  c.net().backward(tape, d_logits, scratch, &d_input);
  d_input.resize(x.size());
  return d_input;
}

LossGrad classifier_loss_and_grad(const Classifier& c, std::span<const ClassExample> batch,
                                  const Schedule& sched) {
  if (batch.empty()) throw ValidationError("batch", "must be nonempty");
  LossGrad out{0.0, Vec(c.net().param_count(), 0.0)};
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  Mlp::Tape tape;
  for (const ClassExample& ex : batch) {
    require_same_dim("classifier_loss_and_grad", static_cast<std::size_t>(c.data_dim()), ex.x_t.size());
    check_label(ex.y, c.num_classes());
    Vec log_probs = c.net().forward(encode_input(ex.x_t, ex.t, std::nullopt, 0, sched), tape);
    log_softmax_inplace(log_probs);
    out.loss -= log_probs[static_cast<std::size_t>(ex.y)] * inv_n;
    Vec d_logits(log_probs.size());
    for (std::size_t k = 0; k < d_logits.size(); ++k) {
      d_logits[k] = (std::exp(log_probs[k]) - (static_cast<int>(k) == ex.y ? 1.0 : 0.0)) * inv_n;
    }
    c.net().backward(tape, d_logits, out.grad);
  }
  return out;
}

}  // namespace difflab
