#include "agrimm/common/numeric.hpp"

#include <cmath>

namespace agrimm {

void CompensatedSum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::fabs(sum_) >= std::fabs(x)) {
    correction_ += (sum_ - t) + x;
  } else {
    correction_ += (x - t) + sum_;
  }
  sum_ = t;
}

double compensated_sum(std::span<const double> values) noexcept {
  CompensatedSum acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

double round_half_even(double value, int decimals) {
  if (!std::isfinite(value)) return value;
  const double scale = std::pow(10.0, decimals);
  const double scaled = value * scale;
  const double lower = std::floor(scaled);
  const double frac = scaled - lower;
  double rounded;
  if (std::fabs(frac - 0.5) < 1e-9) {
    rounded = std::fmod(lower, 2.0) == 0.0 ? lower : lower + 1.0;
  } else {
    rounded = frac < 0.5 ? lower : lower + 1.0;
  }
  return rounded / scale;
}

}  // namespace agrimm
