#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "idex/rng.hpp"

namespace idex {

enum class Activation { Identity, Tanh };

/// Plain fully connected network. Layer l maps weights[l] * x + biases[l]
/// through its activation. Value semantics throughout: copying an Mlp copies
/// the parameters, and forward/backward never mutate them.
struct Mlp {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  std::vector<Activation> activations;

  int layer_count() const { return static_cast<int>(weights.size()); }
  int input_size() const {
    return weights.empty() ? 0 : static_cast<int>(weights.front().cols());
  }
  int output_size() const {
    return weights.empty() ? 0 : static_cast<int>(weights.back().rows());
  }

  bool finite() const {
    for (const auto& w : weights)
      if (!w.allFinite()) return false;
    for (const auto& b : biases)
      if (!b.allFinite()) return false;
    return true;
  }
};

/// Gradient (or moment) container shape-congruent with an Mlp.
struct MlpGrads {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  static MlpGrads zeros_like(const Mlp& net) {
    MlpGrads g;
    g.weights.reserve(net.weights.size());
    g.biases.reserve(net.biases.size());
    for (const auto& w : net.weights)
      g.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    for (const auto& b : net.biases)
      g.biases.push_back(Eigen::VectorXd::Zero(b.size()));
    return g;
  }

  bool finite() const {
    for (const auto& w : weights)
      if (!w.allFinite()) return false;
    for (const auto& b : biases)
      if (!b.allFinite()) return false;
    return true;
  }

  /// this += scale * other
  void add_scaled(const MlpGrads& other, double scale) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
      weights[l] += scale * other.weights[l];
      biases[l] += scale * other.biases[l];
    }
  }
};

/// Builds a net with the given layer widths. Hidden layers get `hidden`
/// activation, the last layer `output`. Weights are drawn uniformly in
/// +-sqrt(6 / (fan_in + fan_out)), biases start at zero.
inline Mlp make_mlp(const std::vector<int>& widths, Rng& rng,
                    Activation hidden = Activation::Tanh,
                    Activation output = Activation::Identity) {
  if (widths.size() < 2)
    throw std::invalid_argument("make_mlp: need at least input and output widths");
  Mlp net;
  const std::size_t layers = widths.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const int fan_in = widths[l];
    const int fan_out = widths[l + 1];
    if (fan_in < 1 || fan_out < 1)
      throw std::invalid_argument("make_mlp: layer widths must be positive");
    const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int i = 0; i < fan_out; ++i)
      for (int j = 0; j < fan_in; ++j) w(i, j) = rng.uniform(-r, r);
    net.weights.push_back(std::move(w));
    net.biases.push_back(Eigen::VectorXd::Zero(fan_out));
    net.activations.push_back(l + 1 == layers ? output : hidden);
  }
  return net;
}

inline Eigen::VectorXd apply_activation(Activation a, Eigen::VectorXd z) {
  if (a == Activation::Tanh) return z.array().tanh().matrix();
  return z;
}

/// Post-activation outputs per layer; trace[0] is the input, trace[L] the
/// network output.
using MlpTrace = std::vector<Eigen::VectorXd>;

inline MlpTrace forward_trace(const Mlp& net, const Eigen::VectorXd& input) {
  if (input.size() != net.input_size())
    throw std::invalid_argument(
        "forward: input width " + std::to_string(input.size()) +
        " does not match first layer width " + std::to_string(net.input_size()));
  MlpTrace trace;
  trace.reserve(net.weights.size() + 1);
  trace.push_back(input);
  for (int l = 0; l < net.layer_count(); ++l) {
    trace.push_back(apply_activation(
        net.activations[l], net.weights[l] * trace.back() + net.biases[l]));
  }
  return trace;
}

inline Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& input) {
  if (input.size() != net.input_size())
    throw std::invalid_argument(
        "forward: input width " + std::to_string(input.size()) +
        " does not match first layer width " + std::to_string(net.input_size()));
  Eigen::VectorXd x = input;
  for (int l = 0; l < net.layer_count(); ++l)
    x = apply_activation(net.activations[l], net.weights[l] * x + net.biases[l]);
  return x;
}

/// Backpropagates `output_grad` (the gradient of some scalar with respect to
/// the network output) through a cached forward trace. Returns the gradient
/// of that scalar with respect to every parameter.
inline MlpGrads backward(const Mlp& net, const MlpTrace& trace,
                         const Eigen::VectorXd& output_grad) {
  if (trace.size() != net.weights.size() + 1)
    throw std::invalid_argument("backward: trace does not match network depth");
  if (output_grad.size() != net.output_size())
    throw std::invalid_argument("backward: output_grad width mismatch");
  MlpGrads grads;
  grads.weights.resize(net.weights.size());
  grads.biases.resize(net.biases.size());
  Eigen::VectorXd g = output_grad;
  for (int l = net.layer_count() - 1; l >= 0; --l) {
    const Eigen::VectorXd& y = trace[l + 1];
    Eigen::VectorXd dz = g;
    if (net.activations[l] == Activation::Tanh)
      dz.array() *= 1.0 - y.array().square();
    grads.weights[l].noalias() = dz * trace[l].transpose();
    grads.biases[l] = dz;
    if (l > 0) g.noalias() = net.weights[l].transpose() * dz;
  }
  return grads;
}

inline MlpGrads backward(const Mlp& net, const Eigen::VectorXd& input,
                         const Eigen::VectorXd& output_grad) {
  return backward(net, forward_trace(net, input), output_grad);
}

/// First-order optimizer settings. Adaptive-moment mode by default; the
/// plain_sgd switch drops the moment machinery and steps by lr * grad, which
/// keeps hand-computed update checks simple.
struct OptimizerConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool plain_sgd = false;
};

namespace detail {

/// One descent step on a single parameter tensor. `t` is the 1-based step
/// count used for bias correction.
template <typename P, typename G>
void optimizer_step(P& param, const G& grad, P& m, P& v, long t,
                    const OptimizerConfig& c) {
  if (c.plain_sgd) {
    param -= c.learning_rate * grad;
    return;
  }
  m = c.beta1 * m + (1.0 - c.beta1) * grad;
  v = (c.beta2 * v.array() + (1.0 - c.beta2) * grad.array().square()).matrix();
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
  param.array() -=
      c.learning_rate * (m.array() / bc1) /
      ((v.array() / bc2).sqrt() + c.epsilon);
}

}  // namespace detail

/// Optimizer state for a full Mlp: per-parameter moments plus step count.
class MlpOptimizer {
 public:
  MlpOptimizer(const Mlp& shape, OptimizerConfig config = {})
      : config_(config),
        first_moment_(MlpGrads::zeros_like(shape)),
        second_moment_(MlpGrads::zeros_like(shape)) {}

  /// Descent step: params -= step(grads). Returns false (and touches
  /// nothing) when the gradient is non-finite, so the caller can count the
  /// skipped step. Callers wanting ascent negate the gradient.
  bool apply(Mlp& params, const MlpGrads& grads) {
    if (!grads.finite()) return false;
    ++step_count_;
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
      detail::optimizer_step(params.weights[l], grads.weights[l],
                             first_moment_.weights[l], second_moment_.weights[l],
                             step_count_, config_);
      detail::optimizer_step(params.biases[l], grads.biases[l],
                             first_moment_.biases[l], second_moment_.biases[l],
                             step_count_, config_);
    }
    return true;
  }

  long step_count() const { return step_count_; }
  const OptimizerConfig& config() const { return config_; }

 private:
  OptimizerConfig config_;
  long step_count_ = 0;
  MlpGrads first_moment_;
  MlpGrads second_moment_;
};

/// Same optimizer over a single matrix parameter (used for the critic's
/// linear head block).
class MatrixOptimizer {
 public:
  MatrixOptimizer(Eigen::Index rows, Eigen::Index cols,
                  OptimizerConfig config = {})
      : config_(config),
        first_moment_(Eigen::MatrixXd::Zero(rows, cols)),
        second_moment_(Eigen::MatrixXd::Zero(rows, cols)) {}

  bool apply(Eigen::MatrixXd& params, const Eigen::MatrixXd& grads) {
    if (!grads.allFinite()) return false;
    ++step_count_;
    detail::optimizer_step(params, grads, first_moment_, second_moment_,
                           step_count_, config_);
    return true;
  }

  long step_count() const { return step_count_; }

 private:
  OptimizerConfig config_;
  long step_count_ = 0;
  Eigen::MatrixXd first_moment_;
  Eigen::MatrixXd second_moment_;
};

}  // namespace idex
