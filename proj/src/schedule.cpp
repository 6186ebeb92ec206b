#include "difflab/schedule.hpp"

#include <cmath>
#include <numbers>

namespace difflab {

namespace {

constexpr double kMaxCosineBeta = 0.999;

void check_beta(const char* field, double beta) {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw ValidationError(field, "must lie in (0, 1), got " + std::to_string(beta));
  }
}

void check_steps(int steps) {
  if (steps < 1) throw ValidationError("T", "must be >= 1, got " + std::to_string(steps));
}

}  // namespace

Schedule::Schedule(std::vector<double> betas, ScheduleSpec spec)
    : steps_(static_cast<int>(betas.size())), spec_(spec) {
  check_steps(steps_);
  spec_.steps = steps_;
  beta_.assign(betas.size() + 1, 0.0);
  alpha_.assign(betas.size() + 1, 0.0);
  alpha_bar_.assign(betas.size() + 1, 1.0);
  beta_tilde_.assign(betas.size() + 1, 0.0);
  for (int t = 1; t <= steps_; ++t) {
    const double b = betas[t - 1];
    check_beta("beta", b);
    beta_[t] = b;
    alpha_[t] = 1.0 - b;
    alpha_bar_[t] = alpha_bar_[t - 1] * alpha_[t];
    beta_tilde_[t] = (1.0 - alpha_bar_[t - 1]) / (1.0 - alpha_bar_[t]) * b;
  }
}

void Schedule::check_time(int t, int lo) const {
  if (t < lo || t > steps_) {
    throw ValidationError("t", "must lie in [" + std::to_string(lo) + ", " +
                                   std::to_string(steps_) + "], got " + std::to_string(t));
  }
}

Schedule make_linear_schedule(int steps, double beta_start, double beta_end) {
  check_steps(steps);
  check_beta("beta_start", beta_start);
  check_beta("beta_end", beta_end);
  if (beta_start > beta_end) {
    throw ValidationError("beta_end", "must be >= beta_start");
  }
  std::vector<double> betas(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    betas[i] = steps == 1 ? beta_start
                          : beta_start + (beta_end - beta_start) * i / (steps - 1);
  }
  betas.back() = steps == 1 ? beta_start : beta_end;
  return Schedule(std::move(betas), {ScheduleKind::kLinear, steps, beta_start, beta_end, 0.008});
}

Schedule make_cosine_schedule(int steps, double offset) {
  check_steps(steps);
  if (!(offset > 0.0)) {
    throw ValidationError("offset", "must be > 0, got " + std::to_string(offset));
  }
  const auto f = [&](int t) {
    const double c = std::cos((static_cast<double>(t) / steps + offset) / (1.0 + offset) *
                              std::numbers::pi / 2.0);
    return c * c;
  };
  const double f0 = f(0);
  std::vector<double> betas(static_cast<std::size_t>(steps));
  double prev = 1.0;
  for (int t = 1; t <= steps; ++t) {
    const double cur = f(t) / f0;
    betas[t - 1] = std::min(1.0 - cur / prev, kMaxCosineBeta);
    prev = cur;
  }
  ScheduleSpec spec;
  spec.kind = ScheduleKind::kCosine;
  spec.steps = steps;
  spec.cosine_offset = offset;
  return Schedule(std::move(betas), spec);
}

Schedule make_schedule(const ScheduleSpec& spec) {
  switch (spec.kind) {
    case ScheduleKind::kLinear:
      return make_linear_schedule(spec.steps, spec.beta_start, spec.beta_end);
    case ScheduleKind::kCosine:
      return make_cosine_schedule(spec.steps, spec.cosine_offset);
  }
  throw ValidationError("kind", "unknown schedule kind");
}

std::string to_string(ScheduleKind kind) {
  return kind == ScheduleKind::kLinear ? "linear" : "cosine";
}

ScheduleKind schedule_kind_from_string(const std::string& name) {
  if (name == "linear") return ScheduleKind::kLinear;
  if (name == "cosine") return ScheduleKind::kCosine;
  throw ValidationError("schedule", "unknown schedule kind '" + name + "'");
}

}  // namespace difflab
