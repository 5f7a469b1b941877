#pragma once

#include <cstdint>

namespace agrimm {

/// SplitMix64 finalizer; used to expand user seeds into generator state.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// xorshift64* generator (Vigna 2014). Output sequence for a given seed is
/// part of the split file contract and pinned by test vectors.
class Xorshift64Star {
 public:
  explicit Xorshift64Star(std::uint64_t seed) noexcept;

  std::uint64_t next() noexcept;

  /// Uniform integer in [0, bound) by rejection sampling; bound must be > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;

  /// Uniform double in [0, 1) built from the top 53 bits.
  double unit() noexcept;

 private:
  std::uint64_t state_;
};

}  // namespace agrimm
