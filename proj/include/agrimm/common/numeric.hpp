#pragma once

#include <span>

namespace agrimm {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + correction_; }

 private:
  double sum_ = 0.0;
  double correction_ = 0.0;
};

double compensated_sum(std::span<const double> values) noexcept;

/// Rounds to `decimals` places with ties going to the even neighbour. A value
/// within 1e-9 (in units of the last kept place) of a tie counts as a tie, so
/// decimal ties that binary cannot represent exactly still round to even.
double round_half_even(double value, int decimals);

}  // namespace agrimm
