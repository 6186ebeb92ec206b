#pragma once

#include <string>
#include <vector>

#include "difflab/types.hpp"

namespace difflab {

enum class ScheduleKind { kLinear, kCosine };

/// Construction arguments of a schedule. Checkpoints store these rather than
/// the derived arrays; the arrays are rebuilt and revalidated on load.
struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::kLinear;
  int steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  double cosine_offset = 0.008;

  bool operator==(const ScheduleSpec&) const = default;
};

/// Variance schedule with every per-step quantity precomputed.
///
/// All accessors take the diffusion time t with 1-based indexing,
/// t in {1..T}; `alpha_bar` additionally accepts t = 0 (where it equals 1).
/// Immutable after construction.
class Schedule {
 public:
  /// Builds a schedule from explicit betas (beta[0] is step 1).
  explicit Schedule(std::vector<double> betas, ScheduleSpec spec = {});

  int steps() const noexcept { return steps_; }
  const ScheduleSpec& spec() const noexcept { return spec_; }

  double beta(int t) const { return beta_[checked(t, 1)]; }
  double alpha(int t) const { return alpha_[checked(t, 1)]; }
  double alpha_bar(int t) const { return alpha_bar_[checked(t, 0)]; }
  double beta_tilde(int t) const { return beta_tilde_[checked(t, 1)]; }

  /// Throws ValidationError("t") unless lo <= t <= T.
  void check_time(int t, int lo = 1) const;

 private:
  std::size_t checked(int t, int lo) const {
    check_time(t, lo);
    return static_cast<std::size_t>(t);
  }

  int steps_;
  ScheduleSpec spec_;
  // Index 0 of beta_/alpha_/beta_tilde_ is unused padding.
  std::vector<double> beta_;
  std::vector<double> alpha_;
  std::vector<double> alpha_bar_;
  std::vector<double> beta_tilde_;
};

/// Betas linearly interpolated from beta_start (t=1) to beta_end (t=T).
Schedule make_linear_schedule(int steps, double beta_start, double beta_end);

/// Cosine construction: alpha_bar(t) = f(t)/f(0) with
/// f(t) = cos^2(((t/T + offset)/(1 + offset)) * pi/2), betas clipped at 0.999.
Schedule make_cosine_schedule(int steps, double offset = 0.008);

Schedule make_schedule(const ScheduleSpec& spec);

std::string to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& name);

}  // namespace difflab
