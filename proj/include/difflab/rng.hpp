#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "difflab/types.hpp"

namespace difflab {

/// Philox4x32-10 block function (Salmon et al., Random123). Exposed for
/// known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// Counter-based generator addressed by an explicit (seed, stream) pair.
///
/// The seed is the Philox key; the stream id occupies the upper half of the
/// 128-bit counter and the block index the lower half, so every (seed, stream)
/// pair owns a disjoint 2^64-block sequence. Standard normals come from the
/// Box-Muller transform, two per pair of uniforms, the second one cached.
/// That choice is part of the determinism contract: identical (seed, stream)
/// and identical call sequence give bit-identical draws.
///
/// A single Rng must not be shared between concurrent consumers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() noexcept;
  /// Uniform on (0, 1).
  double uniform_open() noexcept;
  /// Uniform integer on [0, n). `n` must be positive.
  std::uint64_t uniform_index(std::uint64_t n) noexcept;
  bool bernoulli(double p) noexcept;

  double normal() noexcept;
  void fill_normal(std::span<double> out) noexcept;
  Vec normal_vector(std::size_t d);

  /// Number of standard-normal values handed out so far.
  std::uint64_t normal_draws() const noexcept { return normal_draws_; }

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
  std::uint64_t normal_draws_ = 0;
};

}  // namespace difflab
