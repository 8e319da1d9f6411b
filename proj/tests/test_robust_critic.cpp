#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "idex/critic.hpp"
#include "idex/robust.hpp"
#include "idex/rng.hpp"

using namespace idex;

namespace {

// Sort-based oracle, kept deliberately separate from the nth_element
// implementation in the library.
double oracle_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double oracle_mad(const std::vector<double>& v) {
  const double c = oracle_median(v);
  std::vector<double> dev;
  for (double x : v) dev.push_back(std::abs(x - c));
  return oracle_median(dev);
}

// Critic with a hand-set constant feature, so head values equal the bias
// column exactly.
EnsembleCritic constant_feature_critic(const std::vector<double>& head_values,
                                       Rng& rng) {
  CriticConfig cfg;
  cfg.hidden = {1};
  cfg.ensemble_size = static_cast<int>(head_values.size());
  cfg.prior_scale = 0.0;
  EnsembleCritic critic(1, cfg, rng);
  critic.mutable_trunk().weights[0].setZero();
  critic.mutable_trunk().biases[0].setZero();  // feature = tanh(0) = 0
  critic.mutable_heads().setZero();
  for (std::size_t k = 0; k < head_values.size(); ++k)
    critic.mutable_heads()(static_cast<int>(k), 1) = head_values[k];
  return critic;
}

// Critic whose single head reads the raw state: trunk forced linear
// identity, head weight 1, bias 0, so V(s) = s.
EnsembleCritic linear_identity_critic(Rng& rng, double gamma) {
  CriticConfig cfg;
  cfg.hidden = {1};
  cfg.ensemble_size = 1;
  cfg.prior_scale = 0.0;
  cfg.discount = gamma;
  EnsembleCritic critic(1, cfg, rng);
  critic.mutable_trunk().weights[0](0, 0) = 1.0;
  critic.mutable_trunk().biases[0][0] = 0.0;
  critic.mutable_trunk().activations[0] = Activation::Identity;
  critic.mutable_heads()(0, 0) = 1.0;
  critic.mutable_heads()(0, 1) = 0.0;
  return critic;
}

Transition make_transition(double s, double s_next, double r, bool done) {
  Transition t;
  t.state = Eigen::VectorXd::Constant(1, s);
  t.next_state = Eigen::VectorXd::Constant(1, s_next);
  t.action = Eigen::VectorXd::Zero(1);
  t.task_reward = r;
  t.behavior_log_likelihood = -1.0;
  t.done = done;
  return t;
}

}  // namespace

TEST_CASE("median: frozen examples", "[critic]") {
  const std::vector<double> a = {1, 2, 3, 4, 100};
  const std::vector<double> b = {1, 2, 3, 4};
  REQUIRE(median(a) == 3.0);
  REQUIRE(median(b) == 2.5);
  const std::vector<double> single = {-7.25};
  REQUIRE(median(single) == -7.25);
  REQUIRE_THROWS_AS(median(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("dispersion: frozen examples", "[critic]") {
  const std::vector<double> a = {1, 2, 3, 4, 100};  // deviations 2,1,0,1,97
  REQUIRE(median_abs_deviation(a) == 1.0);
  const std::vector<double> same = {4.2, 4.2, 4.2};
  REQUIRE(median_abs_deviation(same) == 0.0);
  const std::vector<double> b = {1, 2, 3, 4};  // center 2.5 -> 1.5,.5,.5,1.5
  REQUIRE(median_abs_deviation(b) == 1.0);
  const std::vector<double> single = {9.0};
  REQUIRE(median_abs_deviation(single) == 0.0);
}

TEST_CASE("median/MAD agree exactly with the sort oracle", "[critic]") {
  Rng rng(101);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t k = 1 + rng.uniform_index(25);
    std::vector<double> v(k);
    for (auto& x : v) x = rng.uniform(-50, 50);
    REQUIRE(median(v) == oracle_median(v));
    REQUIRE(median_abs_deviation(v) == oracle_mad(v));
  }
}

TEST_CASE("median/MAD invariances", "[critic]") {
  Rng rng(55);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + rng.uniform_index(12);
    std::vector<double> v(k);
    for (auto& x : v) x = rng.uniform(-5, 5);
    const double med = median(v);
    const double mad = median_abs_deviation(v);

    std::vector<double> shuffled = v;
    for (std::size_t i = shuffled.size(); i > 1; --i)
      std::swap(shuffled[i - 1], shuffled[rng.uniform_index(i)]);
    REQUIRE(median(shuffled) == med);
    REQUIRE(median_abs_deviation(shuffled) == mad);

    const double c = rng.uniform(-3, 3);
    std::vector<double> shifted = v;
    for (auto& x : shifted) x += c;
    REQUIRE(median(shifted) == Catch::Approx(med + c).margin(1e-12));
    REQUIRE(median_abs_deviation(shifted) == Catch::Approx(mad).margin(1e-12));

    std::vector<double> scaled = v;
    for (auto& x : scaled) x *= c;
    REQUIRE(median_abs_deviation(scaled) ==
            Catch::Approx(std::abs(c) * mad).margin(1e-12));
  }
}

TEST_CASE("median is robust to one outlier where the mean is not", "[critic]") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 5 + rng.uniform_index(21);
    std::vector<double> v(k);
    for (auto& x : v) x = rng.uniform(-10, 10);
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    // Replacing one value moves the median at most across the adjacent
    // central order statistics.
    const std::size_t lo = (k - 1) / 2 - 1;
    const std::size_t hi = k / 2 + 1;
    const double bound = sorted[hi] - sorted[lo] + 1e-12;

    std::vector<double> bad = v;
    const double outlier = rng.uniform() < 0.5 ? 1e9 : -1e9;
    bad[rng.uniform_index(k)] = outlier;
    const double median_change = std::abs(median(bad) - median(v));
    const double mean_change = std::abs(mean(bad) - mean(v));
    REQUIRE(median_change <= bound);
    REQUIRE(mean_change > 1e6);  // grows without bound in the outlier
    REQUIRE(mean_change > 100.0 * std::max(median_change, 1e-9));
  }
}

TEST_CASE("value_heads: zero heads and zero prior scale give zeros", "[critic]") {
  Rng rng(1);
  CriticConfig cfg;
  cfg.hidden = {8};
  cfg.ensemble_size = 4;
  cfg.prior_scale = 0.0;
  EnsembleCritic critic(2, cfg, rng);
  const Eigen::VectorXd v = critic.value_heads(Eigen::Vector2d(0.3, -0.8));
  REQUIRE(v.size() == 4);
  for (int k = 0; k < 4; ++k) REQUIRE(v[k] == 0.0);
  const ValueReadout r = critic.read(Eigen::Vector2d(0.3, -0.8));
  REQUIRE(r.consensus == 0.0);
  REQUIRE(r.dispersion == 0.0);
}

TEST_CASE("value_heads: single head is a plain value function", "[critic]") {
  Rng rng(2);
  CriticConfig cfg;
  cfg.hidden = {8};
  cfg.ensemble_size = 1;
  cfg.prior_scale = 1.0;
  EnsembleCritic critic(2, cfg, rng);
  const Eigen::Vector2d s(0.1, 0.2);
  const ValueReadout r = critic.read(s);
  REQUIRE(r.per_head.size() == 1);
  REQUIRE(r.consensus == r.per_head[0]);
  REQUIRE(r.dispersion == 0.0);
}

TEST_CASE("value_heads: distinct priors with zero trainable heads", "[critic]") {
  Rng rng(3);
  CriticConfig cfg;
  cfg.ensemble_size = 10;
  cfg.prior_scale = 1.0;
  EnsembleCritic critic(3, cfg, rng);
  // heads start at zero, so head k = prior_scale * c_k . phi(s)
  Rng state_rng(99);
  int distinct_states = 0;
  const int total_states = 100;
  for (int t = 0; t < total_states; ++t) {
    Eigen::VectorXd s(3);
    for (int i = 0; i < 3; ++i) s[i] = state_rng.uniform(-2, 2);
    const Eigen::VectorXd v = critic.value_heads(s);
    bool all_distinct = true;
    for (int a = 0; a < v.size() && all_distinct; ++a)
      for (int b = a + 1; b < v.size(); ++b)
        if (std::abs(v[a] - v[b]) <= 1e-9) {
          all_distinct = false;
          break;
        }
    distinct_states += all_distinct ? 1 : 0;
  }
  REQUIRE(distinct_states >= 99);
}

TEST_CASE("read: forced head values give the oracle consensus/dispersion",
          "[critic]") {
  Rng rng(4);
  EnsembleCritic critic = constant_feature_critic({1, 2, 3, 4, 100}, rng);
  const ValueReadout r = critic.read(Eigen::VectorXd::Constant(1, 0.7));
  REQUIRE(r.consensus == 3.0);
  REQUIRE(r.dispersion == 1.0);
}

TEST_CASE("read: dispersion invariant under head permutation", "[critic]") {
  Rng rng(5);
  EnsembleCritic critic = constant_feature_critic({2.5, -1, 0, 7, 3.5}, rng);
  const ValueReadout base = critic.read(Eigen::VectorXd::Zero(1));
  EnsembleCritic permuted = constant_feature_critic({7, 0, 3.5, 2.5, -1}, rng);
  const ValueReadout perm = permuted.read(Eigen::VectorXd::Zero(1));
  REQUIRE(base.consensus == perm.consensus);
  REQUIRE(base.dispersion == perm.dispersion);
}

TEST_CASE("td_errors: zero critic, zero reward gives zero delta", "[critic]") {
  Rng rng(6);
  CriticConfig cfg;
  cfg.prior_scale = 0.0;
  cfg.hidden = {4};
  EnsembleCritic critic(1, cfg, rng);
  critic.mutable_heads().setZero();
  const Transition t = make_transition(0.3, 0.6, 0.0, false);
  const Transition* batch[] = {&t};
  const double rewards[] = {0.0};
  const auto td = critic.td_errors(batch, rewards);
  REQUIRE(td.consensus[0] == 0.0);
}

TEST_CASE("td_errors: direct arithmetic on a linear critic", "[critic]") {
  Rng rng(7);
  EnsembleCritic critic = linear_identity_critic(rng, 0.99);
  // V(s) = s: s = 1, s' = 2, r = 1 -> delta = 1 + 0.99*2 - 1 = 1.98
  const Transition t = make_transition(1.0, 2.0, 1.0, false);
  const Transition* batch[] = {&t};
  const double rewards[] = {1.0};
  const auto td = critic.td_errors(batch, rewards);
  REQUIRE(td.consensus[0] == Catch::Approx(1.98).margin(1e-15));
  REQUIRE(td.per_head(0, 0) == Catch::Approx(1.98).margin(1e-15));
}

TEST_CASE("td_errors: terminal transitions mask the bootstrap", "[critic]") {
  Rng rng(8);
  EnsembleCritic critic = linear_identity_critic(rng, 0.99);
  // V(s) = 0.5 at s = 0.5; done, so delta = r - V(s) = 1 - 0.5
  const Transition t = make_transition(0.5, 123.0, 1.0, true);
  const Transition* batch[] = {&t};
  const double rewards[] = {1.0};
  const auto td = critic.td_errors(batch, rewards);
  REQUIRE(td.consensus[0] == 0.5);
}

TEST_CASE("td_errors: gamma = 0 reduces to r - V(s)", "[critic]") {
  Rng rng(9);
  CriticConfig cfg;
  cfg.discount = 0.0;
  cfg.ensemble_size = 5;
  EnsembleCritic critic(2, cfg, rng);
  Rng sample_rng(10);
  for (int i = 0; i < 20; ++i) {
    Transition t;
    t.state = Eigen::Vector2d(sample_rng.uniform(-1, 1), sample_rng.uniform(-1, 1));
    t.next_state = Eigen::Vector2d(sample_rng.uniform(-1, 1), sample_rng.uniform(-1, 1));
    t.action = Eigen::VectorXd::Zero(1);
    t.done = sample_rng.uniform() < 0.5;
    const double r = sample_rng.uniform(-2, 2);
    const Transition* batch[] = {&t};
    const double rewards[] = {r};
    const auto td = critic.td_errors(batch, rewards);
    REQUIRE(td.consensus[0] == r - critic.read(t.state).consensus);
  }
}

TEST_CASE("update: zero deltas leave parameters unchanged", "[critic]") {
  Rng rng(11);
  CriticConfig cfg;
  cfg.prior_scale = 0.0;
  cfg.hidden = {4};
  EnsembleCritic critic(1, cfg, rng);
  critic.mutable_heads().setZero();
  const Mlp trunk_before = critic.trunk();
  const Eigen::MatrixXd heads_before = critic.heads();
  MlpOptimizer trunk_opt(critic.trunk());
  MatrixOptimizer head_opt(cfg.ensemble_size, critic.feature_size() + 1);
  const Transition t = make_transition(0.4, 0.9, 0.0, false);
  const Transition* batch[] = {&t};
  const double rewards[] = {0.0};  // V == 0 everywhere -> all deltas 0
  const auto res = critic.update(batch, rewards, trunk_opt, head_opt);
  REQUIRE(res.applied);
  REQUIRE(res.loss == 0.0);
  REQUIRE(critic.heads() == heads_before);
  for (std::size_t l = 0; l < trunk_before.weights.size(); ++l)
    REQUIRE(critic.trunk().weights[l] == trunk_before.weights[l]);
}

TEST_CASE("update: hand-computed step on a linear critic", "[critic]") {
  Rng rng(12);
  EnsembleCritic critic = linear_identity_critic(rng, 0.9);
  critic.mutable_heads()(0, 0) = 0.5;  // V(s) = 0.5 s + 0.1
  critic.mutable_heads()(0, 1) = 0.1;
  OptimizerConfig oc;
  oc.plain_sgd = true;
  oc.learning_rate = 0.1;
  MlpOptimizer trunk_opt(critic.trunk(), oc);
  MatrixOptimizer head_opt(1, 2, oc);

  const double s = 1.0, s_next = 2.0, r = 1.0;
  const Transition t = make_transition(s, s_next, r, false);
  const Transition* batch[] = {&t};
  const double rewards[] = {r};

  // Pencil oracle with the pre-update parameters:
  //   phi(s) = w_t s + b_t, V = a phi + c
  const double w_t = 1.0, b_t = 0.0, a = 0.5, c = 0.1;
  const double v_s = a * (w_t * s + b_t) + c;
  const double v_next = a * (w_t * s_next + b_t) + c;
  const double delta = r + 0.9 * v_next - v_s;
  // head: theta += lr * delta * [phi, 1]; trunk: w += lr * delta * a * s
  const double expect_a = a + 0.1 * delta * (w_t * s + b_t);
  const double expect_c = c + 0.1 * delta * 1.0;
  const double expect_wt = w_t + 0.1 * delta * a * s;
  const double expect_bt = b_t + 0.1 * delta * a;

  const auto res = critic.update(batch, rewards, trunk_opt, head_opt);
  REQUIRE(res.applied);
  REQUIRE(res.loss == Catch::Approx(0.5 * delta * delta).margin(1e-14));
  REQUIRE(critic.heads()(0, 0) == Catch::Approx(expect_a).margin(1e-14));
  REQUIRE(critic.heads()(0, 1) == Catch::Approx(expect_c).margin(1e-14));
  REQUIRE(critic.trunk().weights[0](0, 0) == Catch::Approx(expect_wt).margin(1e-14));
  REQUIRE(critic.trunk().biases[0][0] == Catch::Approx(expect_bt).margin(1e-14));
}

TEST_CASE("update: prior weights stay bit-identical", "[critic]") {
  Rng rng(13);
  CriticConfig cfg;
  cfg.ensemble_size = 6;
  cfg.hidden = {8};
  EnsembleCritic critic(2, cfg, rng);
  const Eigen::MatrixXd priors_before = critic.priors();
  MlpOptimizer trunk_opt(critic.trunk());
  MatrixOptimizer head_opt(cfg.ensemble_size, critic.feature_size() + 1);
  Rng sample_rng(14);
  for (int step = 0; step < 25; ++step) {
    Transition t;
    t.state = Eigen::Vector2d(sample_rng.uniform(-1, 1), sample_rng.uniform(-1, 1));
    t.next_state = Eigen::Vector2d(sample_rng.uniform(-1, 1), sample_rng.uniform(-1, 1));
    t.action = Eigen::VectorXd::Zero(1);
    t.done = false;
    const Transition* batch[] = {&t};
    const double rewards[] = {sample_rng.uniform(-1, 1)};
    critic.update(batch, rewards, trunk_opt, head_opt);
  }
  REQUIRE(critic.priors() == priors_before);
}
