#pragma once

#include <cmath>
#include <stdexcept>

#include "idex/numeric.hpp"

namespace idex {

/// Breadth-keeping bonus settings. `behavior_ratio` sets how strongly the
/// stored behavior log-likelihood is reflected; `power` equals q - 1 of the
/// underlying q-logarithm.
struct BfsConfig {
  double behavior_ratio = 0.5;  // in [0, 1]
  double power = 0.1;           // > 0
};

/// q-logarithm: (x^(1-q) - 1) / (1 - q), with the natural log as the
/// continuous q -> 1 limit.
inline double q_log(double x, double q) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw std::invalid_argument("q_log: x must be positive and finite");
  if (q == 1.0) return std::log(x);
  return (std::pow(x, 1.0 - q) - 1.0) / (1.0 - q);
}

/// Likelihood-ratio weight exp{(1-q)(log_pi - log_b)} that the q-log
/// self-imitation loss attaches to the policy-gradient term. Equals 1 when
/// the current policy matches the behavior policy.
inline double rho(double log_pi, double log_b, double q,
                  bool* clamped = nullptr) {
  if (!std::isfinite(log_pi) || !std::isfinite(log_b))
    throw std::invalid_argument("rho: log-likelihoods must be finite");
  return clamped_exp((1.0 - q) * (log_pi - log_b), clamped);
}

/// Self-imitation bonus exp{-power * (log_pi - behavior_ratio * log_b)}.
/// With behavior_ratio = 1 this is exactly rho at q = 1 + power. Always
/// strictly positive; treated as a constant reward signal.
inline double bfs_bonus(const BfsConfig& cfg, double log_pi, double log_b,
                        bool* clamped = nullptr) {
  if (!std::isfinite(log_pi) || !std::isfinite(log_b))
    throw std::invalid_argument("bfs_bonus: log-likelihoods must be finite");
  return clamped_exp(-cfg.power * (log_pi - cfg.behavior_ratio * log_b),
                     clamped);
}

}  // namespace idex
