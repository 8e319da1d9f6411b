#pragma once

#include <cmath>
#include <stdexcept>

namespace idex {

/// Depth-seeking bonus settings. `relative_ratio` controls how much of the
/// current-state dispersion is cancelled against the next-state dispersion;
/// at 1 the bonus measures only the change, at 0 only the next state's
/// spread. `power` shapes the magnitude curve.
struct DfsConfig {
  double relative_ratio = 0.5;  // in [0, 1]
  double power = 2.0;           // > 0
  double discount = 0.99;       // in [0, 1)
};

/// Bonus from the relative change of ensemble value dispersion between the
/// current and next state:
///
///   |discount * dispersion_next - relative_ratio * dispersion_curr| ^ power
///
/// The result is a plain reward signal; callers never differentiate through
/// it.
inline double dfs_bonus(const DfsConfig& cfg, double dispersion_next,
                        double dispersion_curr) {
  if (!(dispersion_next >= 0.0) || !(dispersion_curr >= 0.0) ||
      !std::isfinite(dispersion_next) || !std::isfinite(dispersion_curr))
    throw std::invalid_argument(
        "dfs_bonus: dispersions must be finite and non-negative");
  const double diff =
      cfg.discount * dispersion_next - cfg.relative_ratio * dispersion_curr;
  return std::pow(std::abs(diff), cfg.power);
}

}  // namespace idex
