#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "idex/numeric.hpp"

namespace idex {

/// How the two bonuses are mixed into the task reward.
enum class BonusMode { Vanilla, DfsOnly, BfsOnly, Scheduled, MeanFixed, SumFixed };

inline const char* to_string(BonusMode mode) {
  switch (mode) {
    case BonusMode::Vanilla: return "vanilla";
    case BonusMode::DfsOnly: return "dfs";
    case BonusMode::BfsOnly: return "bfs";
    case BonusMode::Scheduled: return "scheduled";
    case BonusMode::MeanFixed: return "mean";
    case BonusMode::SumFixed: return "sum";
  }
  return "?";
}

inline std::optional<BonusMode> parse_bonus_mode(std::string_view s) {
  if (s == "vanilla") return BonusMode::Vanilla;
  if (s == "dfs") return BonusMode::DfsOnly;
  if (s == "bfs") return BonusMode::BfsOnly;
  if (s == "scheduled") return BonusMode::Scheduled;
  if (s == "mean") return BonusMode::MeanFixed;
  if (s == "sum") return BonusMode::SumFixed;
  return std::nullopt;
}

/// Adaptive state of the mixing weight. kappa_d shapes the dispersion
/// stagnation metric, kappa_b the likelihood one; both stay strictly
/// positive under the exponentiated update. last_zeta records the most
/// recent mixing weight.
struct SchedulerState {
  double kappa_d = 1.0;
  double kappa_b = 1.0;
  double kappa_lr = 3e-5;  // 0.1 * the network learning rate by default
  double last_zeta = 0.5;
};

/// Stagnation metric in [0, 1], built from the arithmetic/geometric mean
/// gap:
///
///   m = { 1 - |x - y|^kappa / (x + y)^kappa } ^ (1/kappa)
///
/// 1 when the two inputs agree (learning looks stagnant, including the
/// 0/0 case by convention), 0 when one input dominates completely. kappa
/// shapes the transition: small kappa collapses m to 0 away from x == y,
/// large kappa pushes m toward 1 almost everywhere.
inline double stagnation_metric(double x, double y, double kappa) {
  if (!(x >= 0.0) || !(y >= 0.0) || !std::isfinite(x) || !std::isfinite(y))
    throw std::invalid_argument("stagnation_metric: inputs must be finite and >= 0");
  if (!(kappa > 0.0))
    throw std::invalid_argument("stagnation_metric: kappa must be positive");
  const double total = x + y;
  if (total <= 0.0) return 1.0;
  const double t = std::abs(x - y) / total;
  const double inner = std::max(0.0, 1.0 - std::pow(t, kappa));
  return std::pow(inner, 1.0 / kappa);
}

/// Analytic derivative of the stagnation metric with respect to kappa:
///
///   -(m/kappa) { ln m + (1 - m^kappa) / (kappa m^kappa) * ln(1 - m^kappa) }
///
/// m^kappa is clamped into [1e-6, 1 - 1e-6] before the logarithms.
inline double stagnation_metric_grad(double x, double y, double kappa) {
  if (!(x >= 0.0) || !(y >= 0.0) || !std::isfinite(x) || !std::isfinite(y))
    throw std::invalid_argument("stagnation_metric_grad: inputs must be finite and >= 0");
  if (!(kappa > 0.0))
    throw std::invalid_argument("stagnation_metric_grad: kappa must be positive");
  const double total = x + y;
  const double t = total > 0.0 ? std::abs(x - y) / total : 0.0;
  // u = 1 - m^kappa; clamping u to [1e-6, 1-1e-6] clamps m^kappa to the
  // same interval and keeps both logs well away from their poles.
  double u = t > 0.0 ? std::pow(t, kappa) : 0.0;
  u = std::clamp(u, 1e-6, 1.0 - 1e-6);
  const double mk = 1.0 - u;  // m^kappa
  const double log_m = std::log(mk) / kappa;
  const double m = std::exp(log_m);
  return -(m / kappa) * (log_m + u / (kappa * mk) * std::log(u));
}

/// Mixing weight: the geometric mean of the dispersion-side and
/// likelihood-side stagnation metrics. Stored into state.last_zeta.
inline double zeta_value(SchedulerState& state, double dispersion_next,
                         double dispersion_curr, double pi_density,
                         double b_density) {
  const double m_d =
      stagnation_metric(dispersion_next, dispersion_curr, state.kappa_d);
  const double m_b = stagnation_metric(pi_density, b_density, state.kappa_b);
  state.last_zeta = std::sqrt(m_d * m_b);
  return state.last_zeta;
}

/// One exponentiated-gradient step of kappa_d and kappa_b toward
/// zeta = 1/2. Recomputes and stores zeta for the given inputs first. The
/// gradient of |zeta - 1/2| with respect to each kappa is
/// sign(zeta - 1/2) * (m_other / zeta) * d m / d kappa, with sign(0) = 0 so
/// the target is genuinely stationary. Returns false when the update was
/// skipped (zeta below the 1e-12 guard, or a non-finite gradient).
inline bool update_kappas(SchedulerState& state, double dispersion_next,
                          double dispersion_curr, double pi_density,
                          double b_density) {
  const double m_d =
      stagnation_metric(dispersion_next, dispersion_curr, state.kappa_d);
  const double m_b = stagnation_metric(pi_density, b_density, state.kappa_b);
  const double zeta = std::sqrt(m_d * m_b);
  state.last_zeta = zeta;
  if (zeta < 1e-12) return false;
  const double direction = sign0(zeta - 0.5);
  if (direction == 0.0) return true;
  const double grad_d =
      direction * (m_b / zeta) *
      stagnation_metric_grad(dispersion_next, dispersion_curr, state.kappa_d);
  const double grad_b = direction * (m_d / zeta) *
                        stagnation_metric_grad(pi_density, b_density,
                                               state.kappa_b);
  if (!std::isfinite(grad_d) || !std::isfinite(grad_b)) return false;
  state.kappa_d *= clamped_exp(-state.kappa_lr * grad_d);
  state.kappa_b *= clamped_exp(-state.kappa_lr * grad_b);
  return true;
}

/// Effective (gain, mixing weight) pair per mode. The fixed-mix ablations
/// and the single-bonus conditions are expressed through the same affine
/// composition so their equivalences hold bit-exactly.
struct ComposeWeights {
  double gain;  // effective lambda
  double mix;   // effective zeta
};

inline ComposeWeights mode_weights(BonusMode mode, double scheduled_zeta,
                                   double lambda) {
  switch (mode) {
    case BonusMode::Vanilla: return {0.0, scheduled_zeta};
    case BonusMode::DfsOnly: return {lambda, 1.0};
    case BonusMode::BfsOnly: return {lambda, 0.0};
    case BonusMode::Scheduled: return {lambda, scheduled_zeta};
    case BonusMode::MeanFixed: return {lambda, 0.5};
    case BonusMode::SumFixed: return {2.0 * lambda, 0.5};
  }
  return {0.0, 0.0};
}

/// r + gain * (mix * bonus_dfs + (1 - mix) * bonus_bfs) with the mode's
/// effective gain and mix.
inline double compose_reward(BonusMode mode, double task_reward,
                             double bonus_dfs, double bonus_bfs, double zeta,
                             double lambda) {
  const ComposeWeights w = mode_weights(mode, zeta, lambda);
  return task_reward + w.gain * (w.mix * bonus_dfs + (1.0 - w.mix) * bonus_bfs);
}

}  // namespace idex
