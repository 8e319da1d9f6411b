#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "idex/rng.hpp"

namespace idex {

struct EnvSpec {
  std::string id;
  int observation_dim = 0;
  int action_dim = 0;
  Eigen::VectorXd action_low;
  Eigen::VectorXd action_high;
  int horizon = 1;
  bool sparse = false;
  double noise_scale = 0.0;
};

/// Deterministic desk-scale control environment. With noise_scale 0 every
/// trajectory is bit-reproducible; otherwise Gaussian noise of that scale is
/// added to each observation component (and to the chain transition).
class Environment {
 public:
  struct Step {
    Eigen::VectorXd observation;
    double reward = 0.0;
    bool done = false;
  };

  virtual ~Environment() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual Eigen::VectorXd reset(std::uint64_t seed) = 0;
  virtual Step step(const Eigen::VectorXd& action) = 0;
};

namespace detail {

inline Eigen::VectorXd add_noise(Eigen::VectorXd obs, double scale, Rng& rng) {
  if (scale > 0.0)
    for (int i = 0; i < obs.size(); ++i) obs[i] += scale * rng.normal();
  return obs;
}

inline Eigen::VectorXd clip_action(const Eigen::VectorXd& a,
                                   const EnvSpec& spec) {
  if (a.size() != spec.action_dim)
    throw std::invalid_argument("step: action width mismatch for " + spec.id);
  Eigen::VectorXd out(a.size());
  for (int i = 0; i < a.size(); ++i)
    out[i] = std::clamp(a[i], spec.action_low[i], spec.action_high[i]);
  return out;
}

}  // namespace detail

/// 1-D chain: x' = clip(x + 0.05 a + xi, 0, 1), reward 1 iff x' > 0.9.
/// Trivial dynamics so the learning signal is exploration, nothing else.
class ChainEnv final : public Environment {
 public:
  explicit ChainEnv(double noise_scale) : rng_(0) {
    spec_.id = "chain";
    spec_.observation_dim = 1;
    spec_.action_dim = 1;
    spec_.action_low = Eigen::VectorXd::Constant(1, -1.0);
    spec_.action_high = Eigen::VectorXd::Constant(1, 1.0);
    spec_.horizon = 100;
    spec_.sparse = true;
    spec_.noise_scale = noise_scale;
  }

  const EnvSpec& spec() const override { return spec_; }

  Eigen::VectorXd reset(std::uint64_t seed) override {
    rng_ = Rng(seed);
    x_ = 0.0;
    steps_ = 0;
    return observe();
  }

  Step step(const Eigen::VectorXd& action) override {
    const Eigen::VectorXd a = detail::clip_action(action, spec_);
    const double xi =
        spec_.noise_scale > 0.0 ? spec_.noise_scale * rng_.normal() : 0.0;
    x_ = std::clamp(x_ + 0.05 * a[0] + xi, 0.0, 1.0);
    ++steps_;
    Step s;
    s.reward = x_ > 0.9 ? 1.0 : 0.0;
    s.done = steps_ >= spec_.horizon;
    s.observation = observe();
    return s;
  }

 private:
  Eigen::VectorXd observe() {
    Eigen::VectorXd obs(1);
    obs[0] = x_;
    return detail::add_noise(std::move(obs), spec_.noise_scale, rng_);
  }

  EnvSpec spec_;
  Rng rng_;
  double x_ = 0.0;
  int steps_ = 0;
};

/// 2-D point mass with force actions, semi-implicit Euler, sticky walls.
/// Reward 1 inside a disc of radius 0.1 around (0.8, 0.8).
class PointMassEnv final : public Environment {
 public:
  explicit PointMassEnv(double noise_scale) : rng_(0) {
    spec_.id = "pointmass";
    spec_.observation_dim = 4;
    spec_.action_dim = 2;
    spec_.action_low = Eigen::VectorXd::Constant(2, -1.0);
    spec_.action_high = Eigen::VectorXd::Constant(2, 1.0);
    spec_.horizon = 150;
    spec_.sparse = true;
    spec_.noise_scale = noise_scale;
  }

  const EnvSpec& spec() const override { return spec_; }

  Eigen::VectorXd reset(std::uint64_t seed) override {
    rng_ = Rng(seed);
    pos_ = Eigen::Vector2d(0.1, 0.1);
    vel_ = Eigen::Vector2d::Zero();
    steps_ = 0;
    return observe();
  }

  Step step(const Eigen::VectorXd& action) override {
    const Eigen::VectorXd a = detail::clip_action(action, spec_);
    constexpr double dt = 0.1;
    for (int i = 0; i < 2; ++i) {
      vel_[i] = std::clamp(vel_[i] + dt * a[i], -1.0, 1.0);
      double p = pos_[i] + dt * vel_[i];
      if (p < 0.0 || p > 1.0) {
        p = std::clamp(p, 0.0, 1.0);
        vel_[i] = 0.0;  // walls absorb momentum
      }
      pos_[i] = p;
    }
    ++steps_;
    Step s;
    s.reward = (pos_ - Eigen::Vector2d(0.8, 0.8)).norm() < 0.1 ? 1.0 : 0.0;
    s.done = steps_ >= spec_.horizon;
    s.observation = observe();
    return s;
  }

 private:
  Eigen::VectorXd observe() {
    Eigen::VectorXd obs(4);
    obs << pos_[0], pos_[1], vel_[0], vel_[1];
    return detail::add_noise(std::move(obs), spec_.noise_scale, rng_);
  }

  EnvSpec spec_;
  Rng rng_;
  Eigen::Vector2d pos_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d vel_ = Eigen::Vector2d::Zero();
  int steps_ = 0;
};

/// Torque-limited pendulum swing-up. Angle 0 is upright, pi hangs down;
/// the start is the hanging rest state. Semi-implicit Euler at dt = 0.05
/// with g = 10, m = 1, l = 1 and |torque| <= 2 (gravity dominates, so the
/// agent has to pump). Dense variant rewards cos(theta); sparse variant
/// pays 1 only while cos(theta) > 0.95.
class PendulumEnv final : public Environment {
 public:
  PendulumEnv(bool dense, double noise_scale) : rng_(0), dense_(dense) {
    spec_.id = dense ? "pendulum-dense" : "pendulum-sparse";
    spec_.observation_dim = 3;
    spec_.action_dim = 1;
    spec_.action_low = Eigen::VectorXd::Constant(1, -2.0);
    spec_.action_high = Eigen::VectorXd::Constant(1, 2.0);
    spec_.horizon = 200;
    spec_.sparse = !dense;
    spec_.noise_scale = noise_scale;
  }

  const EnvSpec& spec() const override { return spec_; }

  Eigen::VectorXd reset(std::uint64_t seed) override {
    rng_ = Rng(seed);
    theta_ = kPi;
    theta_dot_ = 0.0;
    steps_ = 0;
    return observe();
  }

  Step step(const Eigen::VectorXd& action) override {
    const Eigen::VectorXd a = detail::clip_action(action, spec_);
    constexpr double dt = 0.05;
    constexpr double gravity = 10.0;  // g / l with m = l = 1
    theta_dot_ += dt * (gravity * std::sin(theta_) + a[0]);
    theta_dot_ = std::clamp(theta_dot_, -8.0, 8.0);
    theta_ = wrap_angle(theta_ + dt * theta_dot_);
    ++steps_;
    Step s;
    const double c = std::cos(theta_);
    s.reward = dense_ ? c : (c > 0.95 ? 1.0 : 0.0);
    s.done = steps_ >= spec_.horizon;
    s.observation = observe();
    return s;
  }

  double angle() const { return theta_; }
  double angular_velocity() const { return theta_dot_; }

  /// Total mechanical energy (kinetic + potential, zero at the pivot
  /// height); used by integrator sanity checks.
  double energy() const {
    return 0.5 * theta_dot_ * theta_dot_ + 10.0 * std::cos(theta_);
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;

  static double wrap_angle(double t) {
    while (t > kPi) t -= 2.0 * kPi;
    while (t <= -kPi) t += 2.0 * kPi;
    return t;
  }

  Eigen::VectorXd observe() {
    Eigen::VectorXd obs(3);
    obs << std::cos(theta_), std::sin(theta_), theta_dot_;
    return detail::add_noise(std::move(obs), spec_.noise_scale, rng_);
  }

  EnvSpec spec_;
  Rng rng_;
  bool dense_;
  double theta_ = kPi;
  double theta_dot_ = 0.0;
  int steps_ = 0;
};

inline const std::vector<std::string>& environment_ids() {
  static const std::vector<std::string> ids = {
      "chain", "pointmass", "pendulum-dense", "pendulum-sparse"};
  return ids;
}

inline std::unique_ptr<Environment> make_environment(const std::string& id,
                                                     double noise_scale) {
  if (noise_scale < 0.0)
    throw std::invalid_argument("make_environment: noise scale must be >= 0");
  if (id == "chain") return std::make_unique<ChainEnv>(noise_scale);
  if (id == "pointmass") return std::make_unique<PointMassEnv>(noise_scale);
  if (id == "pendulum-dense")
    return std::make_unique<PendulumEnv>(true, noise_scale);
  if (id == "pendulum-sparse")
    return std::make_unique<PendulumEnv>(false, noise_scale);
  throw std::invalid_argument("unknown environment id: " + id);
}

}  // namespace idex
