#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "idex/mlp.hpp"
#include "idex/rng.hpp"

namespace idex {

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5*ln(2*pi)

struct PolicyConfig {
  std::vector<int> hidden = {64, 64};
  double log_std_min = -5.0;
  double log_std_max = 2.0;
};

/// Diagonal Gaussian policy. The network maps a state to [mean; log_std]
/// (2 * action_dim outputs); log_std is clamped to [log_std_min,
/// log_std_max]. Sampled actions are clipped to the action bounds, but
/// log-likelihoods are always evaluated at the pre-clip sample.
class GaussianPolicy {
 public:
  GaussianPolicy(int state_dim, Eigen::VectorXd action_low,
                 Eigen::VectorXd action_high, const PolicyConfig& config,
                 Rng& rng)
      : low_(std::move(action_low)),
        high_(std::move(action_high)),
        log_std_min_(config.log_std_min),
        log_std_max_(config.log_std_max) {
    if (low_.size() != high_.size() || low_.size() == 0)
      throw std::invalid_argument("GaussianPolicy: bad action bounds");
    action_dim_ = static_cast<int>(low_.size());
    std::vector<int> widths;
    widths.push_back(state_dim);
    for (int h : config.hidden) widths.push_back(h);
    widths.push_back(2 * action_dim_);
    net_ = make_mlp(widths, rng, Activation::Tanh, Activation::Identity);
  }

  int action_dim() const { return action_dim_; }
  const Mlp& net() const { return net_; }
  Mlp& mutable_net() { return net_; }
  const Eigen::VectorXd& action_low() const { return low_; }
  const Eigen::VectorXd& action_high() const { return high_; }

  struct Sample {
    Eigen::VectorXd action;      // clipped, what the environment receives
    Eigen::VectorXd raw_action;  // pre-clip, what gets stored and re-scored
    double log_likelihood = 0.0;
  };

  Sample act(const Eigen::VectorXd& state, Rng& rng) const {
    return sample_impl(state, &rng);
  }

  /// Evaluation-mode action: the clipped mean, scored at the mean.
  Sample act_deterministic(const Eigen::VectorXd& state) const {
    return sample_impl(state, nullptr);
  }

  double log_prob(const Eigen::VectorXd& state,
                  const Eigen::VectorXd& raw_action) const {
    const Eigen::VectorXd out = forward(net_, state);
    return log_prob_from_output(out, raw_action);
  }

  struct LogProbGrad {
    double log_prob = 0.0;
    MlpGrads grads;  // d log_prob / d parameters
  };

  /// Log-likelihood plus its parameter gradient, sharing one forward pass.
  /// Dimensions whose raw log_std sits outside the clamp window contribute
  /// zero gradient through the log_std head.
  LogProbGrad log_prob_grad(const Eigen::VectorXd& state,
                            const Eigen::VectorXd& raw_action) const {
    const MlpTrace trace = forward_trace(net_, state);
    const Eigen::VectorXd& out = trace.back();
    LogProbGrad result;
    result.log_prob = log_prob_from_output(out, raw_action);
    Eigen::VectorXd output_grad = Eigen::VectorXd::Zero(2 * action_dim_);
    for (int i = 0; i < action_dim_; ++i) {
      const double raw_ls = out[action_dim_ + i];
      const double ls = std::clamp(raw_ls, log_std_min_, log_std_max_);
      const double inv_std = std::exp(-ls);
      const double z = (raw_action[i] - out[i]) * inv_std;
      output_grad[i] = z * inv_std;
      const bool inside = raw_ls > log_std_min_ && raw_ls < log_std_max_;
      output_grad[action_dim_ + i] = inside ? (z * z - 1.0) : 0.0;
    }
    result.grads = backward(net_, trace, output_grad);
    return result;
  }

 private:
  Sample sample_impl(const Eigen::VectorXd& state, Rng* rng) const {
    const Eigen::VectorXd out = forward(net_, state);
    Sample s;
    s.raw_action.resize(action_dim_);
    s.action.resize(action_dim_);
    double ll = 0.0;
    for (int i = 0; i < action_dim_; ++i) {
      const double mean = out[i];
      const double ls =
          std::clamp(out[action_dim_ + i], log_std_min_, log_std_max_);
      const double z = rng ? rng->normal() : 0.0;
      s.raw_action[i] = mean + std::exp(ls) * z;
      ll += -kHalfLog2Pi - ls - 0.5 * z * z;
      s.action[i] = std::clamp(s.raw_action[i], low_[i], high_[i]);
    }
    s.log_likelihood = ll;
    return s;
  }

  double log_prob_from_output(const Eigen::VectorXd& out,
                              const Eigen::VectorXd& raw_action) const {
    if (raw_action.size() != action_dim_)
      throw std::invalid_argument("log_prob: action width mismatch");
    double ll = 0.0;
    for (int i = 0; i < action_dim_; ++i) {
      const double ls =
          std::clamp(out[action_dim_ + i], log_std_min_, log_std_max_);
      const double z = (raw_action[i] - out[i]) * std::exp(-ls);
      ll += -kHalfLog2Pi - ls - 0.5 * z * z;
    }
    return ll;
  }

  Mlp net_;
  Eigen::VectorXd low_, high_;
  int action_dim_ = 0;
  double log_std_min_, log_std_max_;
};

}  // namespace idex
