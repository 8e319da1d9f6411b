#pragma once

#include <cmath>

namespace idex {

inline constexpr double kExpClampLimit = 50.0;

/// exp() with the exponent clamped to [-50, 50]. Peaked policies can produce
/// log-likelihood gaps far outside the representable range early in training;
/// the clamp keeps every bonus finite. When `clamped` is given it is set to
/// true iff the clamp fired, so callers can surface the event count.
inline double clamped_exp(double exponent, bool* clamped = nullptr) {
  if (exponent > kExpClampLimit) {
    if (clamped) *clamped = true;
    exponent = kExpClampLimit;
  } else if (exponent < -kExpClampLimit) {
    if (clamped) *clamped = true;
    exponent = -kExpClampLimit;
  }
  return std::exp(exponent);
}

/// sign with sign(0) = 0, so a quantity sitting exactly on its target
/// produces no update.
inline double sign0(double x) {
  if (x > 0.0) return 1.0;
  if (x < 0.0) return -1.0;
  return 0.0;
}

}  // namespace idex
