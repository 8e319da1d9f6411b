#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "idex/bonus_bfs.hpp"
#include "idex/bonus_dfs.hpp"
#include "idex/critic.hpp"
#include "idex/env.hpp"
#include "idex/mlp.hpp"
#include "idex/numeric.hpp"
#include "idex/policy.hpp"
#include "idex/replay.hpp"
#include "idex/rng.hpp"
#include "idex/scheduler.hpp"

namespace idex {

struct BonusConfig {
  double lambda = 0.1;  // base gain of the composed bonus
  DfsConfig dfs{};
  BfsConfig bfs{};
};

struct AgentConfig {
  BonusMode mode = BonusMode::Scheduled;
  BonusConfig bonus{};
  double discount = 0.99;
  std::vector<int> hidden = {64, 64};
  int ensemble_size = 10;
  double prior_scale = 1.0;
  ConsensusOp consensus = ConsensusOp::Median;
  BootstrapMode bootstrap = BootstrapMode::PerHead;
  OptimizerConfig optimizer{};
  double kappa_init = 1.0;
  double kappa_lr_ratio = 0.1;  // kappa learning rate = ratio * learning_rate
  std::size_t replay_capacity = 10000;
  int batch_size = 64;
  int batches_per_episode = 16;
  // Replayed samples feed the actor only while the policy has drifted less
  // than this many nats from the behavior that produced them. Keeps the
  // replayed policy gradient near on-policy; without it, stale actions on
  // one side of a moving mean push it away without bound.
  double max_policy_drift = 5.0;
};

struct EpisodeStats {
  double task_return = 0.0;
  double zeta_mean = 0.0;
  double dfs_bonus_mean = 0.0;
  double bfs_bonus_mean = 0.0;
  double kappa_d = 1.0;
  double kappa_b = 1.0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  long skips = 0;
  long clamp_events = 0;
  int steps = 0;
};

/// One-step advantage actor-critic over an episodic uniform replay buffer,
/// with the two intrinsic bonuses entering purely through the reward
/// channel. A full training run is a pure function of (config, seed): all
/// randomness flows from the agent's single generator.
class Agent {
 public:
  Agent(const EnvSpec& env_spec, const AgentConfig& config, std::uint64_t seed)
      : config_(config),
        rng_(derive_seed(seed, 1)),
        policy_(env_spec.observation_dim, env_spec.action_low,
                env_spec.action_high, PolicyConfig{config.hidden}, rng_),
        critic_(env_spec.observation_dim, make_critic_config(config), rng_),
        buffer_(config.replay_capacity),
        policy_optimizer_(policy_.net(), config.optimizer),
        trunk_optimizer_(critic_.trunk(), config.optimizer),
        head_optimizer_(config.ensemble_size, critic_.feature_size() + 1,
                        config.optimizer) {
    config_.bonus.dfs.discount = config_.discount;
    scheduler_.kappa_d = config_.kappa_init;
    scheduler_.kappa_b = config_.kappa_init;
    scheduler_.kappa_lr =
        config_.kappa_lr_ratio * config_.optimizer.learning_rate;
  }

  const AgentConfig& config() const { return config_; }
  const GaussianPolicy& policy() const { return policy_; }
  GaussianPolicy& mutable_policy() { return policy_; }
  const EnsembleCritic& critic() const { return critic_; }
  EnsembleCritic& mutable_critic() { return critic_; }
  const SchedulerState& scheduler() const { return scheduler_; }
  const ReplayBuffer& buffer() const { return buffer_; }

  /// Rolls out one episode (storing transitions with their behavior
  /// log-likelihood), then replays minibatches: per sample it reads the
  /// live dispersions, forms both bonuses and the mixing weight, composes
  /// the reward, and (in scheduled mode) steps the kappas; per batch it
  /// takes one critic and one actor optimizer step from the resulting TD
  /// errors. Non-finite samples are skipped and counted, never fatal.
  EpisodeStats train_episode(Environment& env) {
    EpisodeStats stats;
    stats.kappa_d = scheduler_.kappa_d;
    stats.kappa_b = scheduler_.kappa_b;

    Eigen::VectorXd obs = env.reset(rng_.next_u64());
    bool done = false;
    while (!done) {
      const GaussianPolicy::Sample sample = policy_.act(obs, rng_);
      const Environment::Step step = env.step(sample.action);
      buffer_.push(Transition{obs, sample.raw_action, step.observation,
                              step.reward, sample.log_likelihood, step.done});
      stats.task_return += step.reward;
      ++stats.steps;
      obs = step.observation;
      done = step.done;
    }

    replay_updates(stats);
    stats.kappa_d = scheduler_.kappa_d;
    stats.kappa_b = scheduler_.kappa_b;
    return stats;
  }

  /// One deterministic-policy episode; returns the task return.
  double run_episode_deterministic(Environment& env) {
    Eigen::VectorXd obs = env.reset(rng_.next_u64());
    double total = 0.0;
    bool done = false;
    while (!done) {
      const auto sample = policy_.act_deterministic(obs);
      const Environment::Step step = env.step(sample.action);
      total += step.reward;
      obs = step.observation;
      done = step.done;
    }
    return total;
  }

  struct EvalResult {
    std::vector<double> returns;
    double mean = 0.0;
    double sd = 0.0;
  };

  EvalResult evaluate(Environment& env, int episodes) {
    EvalResult out;
    out.returns.reserve(static_cast<std::size_t>(episodes));
    for (int i = 0; i < episodes; ++i)
      out.returns.push_back(run_episode_deterministic(env));
    if (!out.returns.empty()) {
      double s = 0.0;
      for (double r : out.returns) s += r;
      out.mean = s / static_cast<double>(out.returns.size());
      double v = 0.0;
      for (double r : out.returns) v += (r - out.mean) * (r - out.mean);
      out.sd = std::sqrt(v / static_cast<double>(out.returns.size()));
    }
    return out;
  }

 private:
  static CriticConfig make_critic_config(const AgentConfig& c) {
    CriticConfig cc;
    cc.hidden = c.hidden;
    cc.ensemble_size = c.ensemble_size;
    cc.prior_scale = c.prior_scale;
    cc.discount = c.discount;
    cc.consensus = c.consensus;
    cc.bootstrap = c.bootstrap;
    return cc;
  }

  void replay_updates(EpisodeStats& stats) {
    if (buffer_.empty() || config_.batches_per_episode <= 0 ||
        config_.batch_size <= 0)
      return;
    long bonus_samples = 0;
    double zeta_sum = 0.0, dfs_sum = 0.0, bfs_sum = 0.0;
    double actor_loss_sum = 0.0, critic_loss_sum = 0.0;
    int batches_done = 0;

    std::vector<const Transition*> batch;
    std::vector<double> rewards;
    std::vector<GaussianPolicy::LogProbGrad> policy_grads;
    std::vector<bool> actor_eligible;
    batch.reserve(static_cast<std::size_t>(config_.batch_size));
    rewards.reserve(static_cast<std::size_t>(config_.batch_size));
    policy_grads.reserve(static_cast<std::size_t>(config_.batch_size));
    actor_eligible.reserve(static_cast<std::size_t>(config_.batch_size));

    for (int b = 0; b < config_.batches_per_episode; ++b) {
      batch.clear();
      rewards.clear();
      policy_grads.clear();
      actor_eligible.clear();
      for (int i = 0; i < config_.batch_size; ++i) {
        const Transition& tr = buffer_[rng_.uniform_index(buffer_.size())];
        GaussianPolicy::LogProbGrad lp = policy_.log_prob_grad(tr.state, tr.action);
        if (!std::isfinite(lp.log_prob)) {
          ++stats.skips;
          continue;
        }
        double composed = tr.task_reward;
        if (config_.mode != BonusMode::Vanilla) {
          const ValueReadout curr = critic_.read(tr.state);
          const ValueReadout next = critic_.read(tr.next_state);
          if (!std::isfinite(curr.dispersion) || !std::isfinite(next.dispersion)) {
            ++stats.skips;
            continue;
          }
          bool clamped = false;
          const double r_dfs =
              dfs_bonus(config_.bonus.dfs, next.dispersion, curr.dispersion);
          const double r_bfs = bfs_bonus(config_.bonus.bfs, lp.log_prob,
                                         tr.behavior_log_likelihood, &clamped);
          if (clamped) ++stats.clamp_events;
          double zeta_used;
          if (config_.mode == BonusMode::Scheduled) {
            bool clamp_pi = false, clamp_b = false;
            const double pi_density = clamped_exp(lp.log_prob, &clamp_pi);
            const double b_density =
                clamped_exp(tr.behavior_log_likelihood, &clamp_b);
            if (clamp_pi) ++stats.clamp_events;
            if (clamp_b) ++stats.clamp_events;
            if (!update_kappas(scheduler_, next.dispersion, curr.dispersion,
                               pi_density, b_density))
              ++stats.skips;
            zeta_used = scheduler_.last_zeta;
          } else {
            zeta_used = mode_weights(config_.mode, 0.0, 1.0).mix;
          }
          composed = compose_reward(config_.mode, tr.task_reward, r_dfs, r_bfs,
                                    zeta_used, config_.bonus.lambda);
          if (!std::isfinite(composed)) {
            ++stats.skips;
            continue;
          }
          zeta_sum += zeta_used;
          dfs_sum += r_dfs;
          bfs_sum += r_bfs;
          ++bonus_samples;
        }
        batch.push_back(&tr);
        rewards.push_back(composed);
        actor_eligible.push_back(
            std::abs(lp.log_prob - tr.behavior_log_likelihood) <=
            config_.max_policy_drift);
        policy_grads.push_back(std::move(lp));
      }
      if (batch.empty()) continue;

      const EnsembleCritic::TdErrors td = critic_.td_errors(batch, rewards);

      // Actor ascends delta * grad log pi over the drift-eligible samples;
      // the optimizer descends, so the accumulated gradient is negated.
      std::size_t eligible = 0;
      for (const bool e : actor_eligible) eligible += e ? 1 : 0;
      MlpGrads actor_grad = MlpGrads::zeros_like(policy_.net());
      double actor_loss = 0.0;
      if (eligible > 0) {
        const double inv_e = 1.0 / static_cast<double>(eligible);
        for (std::size_t i = 0; i < batch.size(); ++i) {
          if (!actor_eligible[i]) continue;
          actor_grad.add_scaled(policy_grads[i].grads,
                                -td.consensus[static_cast<int>(i)] * inv_e);
          actor_loss -=
              td.consensus[static_cast<int>(i)] * policy_grads[i].log_prob * inv_e;
        }
      }

      const EnsembleCritic::UpdateResult cu =
          critic_.update(batch, rewards, trunk_optimizer_, head_optimizer_);
      if (!cu.applied) ++stats.skips;
      if (eligible > 0 &&
          !policy_optimizer_.apply(policy_.mutable_net(), actor_grad))
        ++stats.skips;

      actor_loss_sum += actor_loss;
      critic_loss_sum += cu.loss;
      ++batches_done;
    }

    if (bonus_samples > 0) {
      stats.zeta_mean = zeta_sum / static_cast<double>(bonus_samples);
      stats.dfs_bonus_mean = dfs_sum / static_cast<double>(bonus_samples);
      stats.bfs_bonus_mean = bfs_sum / static_cast<double>(bonus_samples);
    }
    if (batches_done > 0) {
      stats.actor_loss = actor_loss_sum / batches_done;
      stats.critic_loss = critic_loss_sum / batches_done;
    }
  }

  AgentConfig config_;
  Rng rng_;
  GaussianPolicy policy_;
  EnsembleCritic critic_;
  SchedulerState scheduler_;
  ReplayBuffer buffer_;
  MlpOptimizer policy_optimizer_;
  MlpOptimizer trunk_optimizer_;
  MatrixOptimizer head_optimizer_;
};

}  // namespace idex
