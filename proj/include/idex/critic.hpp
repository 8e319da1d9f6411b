#pragma once

#include <Eigen/Core>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "idex/mlp.hpp"
#include "idex/replay.hpp"
#include "idex/robust.hpp"
#include "idex/rng.hpp"

namespace idex {

/// Consensus/spread statistics over the head values. Median + median
/// absolute deviation is the default; mean + standard deviation exists for
/// the comparison study.
enum class ConsensusOp { Median, Mean };

/// Which value each head bootstraps from: its own next-state estimate
/// (keeps the heads diverse) or the shared consensus.
enum class BootstrapMode { PerHead, Consensus };

struct CriticConfig {
  std::vector<int> hidden = {64, 64};
  int ensemble_size = 10;    // number of heads
  double prior_scale = 1.0;  // weight of the frozen random prior heads
  double discount = 0.99;
  ConsensusOp consensus = ConsensusOp::Median;
  BootstrapMode bootstrap = BootstrapMode::PerHead;
};

struct ValueReadout {
  Eigen::VectorXd per_head;
  double consensus = 0.0;
  double dispersion = 0.0;
};

/// Ensemble state-value function: a shared feature trunk, K trainable
/// linear heads, and K frozen randomized prior heads. Head k evaluates
/// (theta_k + prior_scale * c_k)^T [phi(s); 1]; the priors are drawn once at
/// construction and never touched by updates, so untrained regions keep
/// head disagreement.
class EnsembleCritic {
 public:
  EnsembleCritic(int state_dim, const CriticConfig& config, Rng& rng)
      : config_(config) {
    if (config_.ensemble_size < 1)
      throw std::invalid_argument("EnsembleCritic: ensemble_size must be >= 1");
    if (config_.prior_scale < 0.0)
      throw std::invalid_argument("EnsembleCritic: prior_scale must be >= 0");
    std::vector<int> widths;
    widths.push_back(state_dim);
    for (int h : config_.hidden) widths.push_back(h);
    // The trunk output is the last hidden layer, so it keeps the hidden
    // activation.
    trunk_ = make_mlp(widths, rng, Activation::Tanh, Activation::Tanh);
    const int f = feature_size();
    heads_ = Eigen::MatrixXd::Zero(config_.ensemble_size, f + 1);
    priors_ = Eigen::MatrixXd(config_.ensemble_size, f + 1);
    const double r = std::sqrt(6.0 / static_cast<double>(f + 2));
    for (int k = 0; k < config_.ensemble_size; ++k)
      for (int j = 0; j <= f; ++j) priors_(k, j) = rng.uniform(-r, r);
  }

  int feature_size() const { return trunk_.output_size(); }
  const CriticConfig& config() const { return config_; }
  const Mlp& trunk() const { return trunk_; }
  Mlp& mutable_trunk() { return trunk_; }
  const Eigen::MatrixXd& heads() const { return heads_; }
  Eigen::MatrixXd& mutable_heads() { return heads_; }
  const Eigen::MatrixXd& priors() const { return priors_; }

  /// All K head values at a state.
  Eigen::VectorXd value_heads(const Eigen::VectorXd& state) const {
    return head_values_from_feature(forward(trunk_, state));
  }

  ValueReadout read(const Eigen::VectorXd& state) const {
    ValueReadout out;
    out.per_head = value_heads(state);
    const std::span<const double> view(out.per_head.data(),
                                       static_cast<std::size_t>(out.per_head.size()));
    if (config_.consensus == ConsensusOp::Median) {
      out.consensus = median(view);
      out.dispersion = median_abs_deviation(view);
    } else {
      out.consensus = mean(view);
      out.dispersion = stddev(view);
    }
    return out;
  }

  struct TdErrors {
    Eigen::VectorXd consensus;  // one per sample
    Eigen::MatrixXd per_head;   // samples x heads
  };

  /// One-step TD errors for a batch. `rewards` overrides the stored task
  /// reward (this is where bonus-augmented rewards enter). Terminal
  /// transitions mask the bootstrap term; bootstrap values are plain
  /// numbers, never differentiated.
  TdErrors td_errors(std::span<const Transition* const> batch,
                     std::span<const double> rewards) const {
    if (batch.size() != rewards.size())
      throw std::invalid_argument("td_errors: batch/reward size mismatch");
    const int n = static_cast<int>(batch.size());
    const int k = config_.ensemble_size;
    TdErrors out;
    out.consensus.resize(n);
    out.per_head.resize(n, k);
    for (int i = 0; i < n; ++i) {
      const Transition& tr = *batch[i];
      const Eigen::VectorXd v_curr = value_heads(tr.state);
      const Eigen::VectorXd v_next = value_heads(tr.next_state);
      const double mask = tr.done ? 0.0 : 1.0;
      const double consensus_curr = consensus_of(v_curr);
      const double consensus_next = consensus_of(v_next);
      out.consensus[i] = rewards[i] +
                         config_.discount * consensus_next * mask -
                         consensus_curr;
      for (int h = 0; h < k; ++h) {
        const double target_next = config_.bootstrap == BootstrapMode::PerHead
                                       ? v_next[h]
                                       : consensus_next;
        out.per_head(i, h) =
            rewards[i] + config_.discount * target_next * mask - v_curr[h];
      }
    }
    return out;
  }

  struct UpdateResult {
    double loss = 0.0;  // mean over samples and heads of 0.5 * delta^2
    bool applied = false;
  };

  /// One optimizer step on heads and trunk. Each head descends its own
  /// 0.5 * delta_k^2 against a fixed target; the trunk receives the head
  /// gradients summed and scaled by 1/K. Prior weights are never touched.
  UpdateResult update(std::span<const Transition* const> batch,
                      std::span<const double> rewards,
                      MlpOptimizer& trunk_optimizer,
                      MatrixOptimizer& head_optimizer) {
    if (batch.empty())
      throw std::invalid_argument("EnsembleCritic::update: empty batch");
    const int n = static_cast<int>(batch.size());
    const int k = config_.ensemble_size;
    const int f = feature_size();
    const double inv_n = 1.0 / static_cast<double>(n);

    const TdErrors td = td_errors(batch, rewards);

    Eigen::MatrixXd head_grad = Eigen::MatrixXd::Zero(k, f + 1);
    MlpGrads trunk_grad = MlpGrads::zeros_like(trunk_);
    const Eigen::MatrixXd effective = heads_ + config_.prior_scale * priors_;
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
      const Transition& tr = *batch[i];
      const MlpTrace trace = forward_trace(trunk_, tr.state);
      Eigen::VectorXd phi1(f + 1);
      phi1.head(f) = trace.back();
      phi1[f] = 1.0;
      const Eigen::VectorXd delta = td.per_head.row(i).transpose();
      loss += 0.5 * delta.squaredNorm() / static_cast<double>(k);
      // d(0.5 delta_k^2)/d theta_k = -delta_k * phi1
      head_grad.noalias() -= inv_n * (delta * phi1.transpose());
      // Trunk output gradient: mean over heads of -delta_k * w_k, where
      // w_k includes the prior contribution because the prior heads share
      // the live trunk.
      Eigen::VectorXd feature_grad =
          -(effective.leftCols(f).transpose() * delta) / static_cast<double>(k);
      trunk_grad.add_scaled(backward(trunk_, trace, feature_grad), inv_n);
    }
    loss *= inv_n;

    UpdateResult result;
    result.loss = loss;
    if (!std::isfinite(loss)) return result;  // skip, caller flags
    const bool head_ok = head_optimizer.apply(heads_, head_grad);
    const bool trunk_ok = trunk_optimizer.apply(trunk_, trunk_grad);
    result.applied = head_ok && trunk_ok;
    return result;
  }

 private:
  double consensus_of(const Eigen::VectorXd& values) const {
    const std::span<const double> view(values.data(),
                                       static_cast<std::size_t>(values.size()));
    return config_.consensus == ConsensusOp::Median ? median(view) : mean(view);
  }

  Eigen::VectorXd head_values_from_feature(const Eigen::VectorXd& feature) const {
    const int f = feature_size();
    Eigen::VectorXd phi1(f + 1);
    phi1.head(f) = feature;
    phi1[f] = 1.0;
    return (heads_ + config_.prior_scale * priors_) * phi1;
  }

  CriticConfig config_;
  Mlp trunk_;
  Eigen::MatrixXd heads_;   // trainable, K x (F+1), bias in the last column
  Eigen::MatrixXd priors_;  // frozen, same shape
};

}  // namespace idex
