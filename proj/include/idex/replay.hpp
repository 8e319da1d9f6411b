#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <deque>
#include <stdexcept>

namespace idex {

/// One environment step. `action` is the pre-clip sample so its
/// log-likelihood can be re-evaluated under the current policy later;
/// `behavior_log_likelihood` is the log-density of that sample under the
/// policy that produced it, written once at collection time and never
/// recomputed.
struct Transition {
  Eigen::VectorXd state;
  Eigen::VectorXd action;
  Eigen::VectorXd next_state;
  double task_reward = 0.0;
  double behavior_log_likelihood = 0.0;
  bool done = false;
};

/// Bounded FIFO of transitions; eviction is strictly oldest-first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity)
      : capacity_(capacity) {
    if (capacity_ == 0)
      throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  }

  void push(Transition t) {
    if (data_.size() == capacity_) data_.pop_front();
    data_.push_back(std::move(t));
  }

  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return data_.empty(); }

  const Transition& operator[](std::size_t i) const { return data_[i]; }

 private:
  std::size_t capacity_;
  std::deque<Transition> data_;
};

}  // namespace idex
