#include <catch_amalgamated.hpp>

#include <cmath>

#include "idex/bonus_bfs.hpp"
#include "idex/bonus_dfs.hpp"
#include "idex/rng.hpp"

using namespace idex;

namespace {

// 1-D Gaussian log-density with mean theta, used by the self-imitation
// gradient identity check.
double gauss_log_pdf(double a, double theta, double sigma) {
  const double z = (a - theta) / sigma;
  return -0.5 * std::log(2.0 * 3.14159265358979323846) - std::log(sigma) -
         0.5 * z * z;
}

}  // namespace

TEST_CASE("dfs_bonus: frozen examples at the default settings", "[bonus]") {
  DfsConfig cfg;  // relative_ratio 0.5, power 2, discount 0.99
  REQUIRE(dfs_bonus(cfg, 0.0, 0.0) == 0.0);
  // |0.99*1 - 0.5*0|^2
  REQUIRE(dfs_bonus(cfg, 1.0, 0.0) == Catch::Approx(0.9801).margin(1e-12));
  // |0.99*2 - 0.5*2|^2 = 0.98^2
  REQUIRE(dfs_bonus(cfg, 2.0, 2.0) == Catch::Approx(0.9604).margin(1e-12));
}

TEST_CASE("dfs_bonus: contract violations throw", "[bonus]") {
  DfsConfig cfg;
  REQUIRE_THROWS_AS(dfs_bonus(cfg, -0.1, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(dfs_bonus(cfg, 0.0, -1e-9), std::invalid_argument);
  REQUIRE_THROWS_AS(dfs_bonus(cfg, std::nan(""), 0.0), std::invalid_argument);
}

TEST_CASE("dfs_bonus: non-negative, cancellation, monotonicity, scaling",
          "[bonus]") {
  Rng rng(31);
  for (int i = 0; i < 500; ++i) {
    DfsConfig cfg;
    cfg.discount = rng.uniform(0.0, 0.999);
    cfg.relative_ratio = rng.uniform(0.0, 1.0);
    cfg.power = rng.uniform(0.2, 3.0);
    const double a = rng.uniform(0, 5), b = rng.uniform(0, 5);
    REQUIRE(dfs_bonus(cfg, a, b) >= 0.0);

    // full relative cancellation at ratio == discount, equal dispersions
    DfsConfig cancel = cfg;
    cancel.relative_ratio = cancel.discount;
    REQUIRE(dfs_bonus(cancel, a, a) == 0.0);

    // monotone in the next-state dispersion once its term dominates
    if (cfg.discount * a >= cfg.relative_ratio * b) {
      const double grow = rng.uniform(0.0, 2.0);
      REQUIRE(dfs_bonus(cfg, a + grow, b) >= dfs_bonus(cfg, a, b));
    }

    // dfs(c*x, c*y) = c^power * dfs(x, y)
    const double c = rng.uniform(0, 3);
    REQUIRE(dfs_bonus(cfg, c * a, c * b) ==
            Catch::Approx(std::pow(c, cfg.power) * dfs_bonus(cfg, a, b))
                .margin(1e-10)
                .epsilon(1e-10));
  }
}

TEST_CASE("dfs_bonus: ratio 1, power 2 is the squared dispersion change",
          "[bonus]") {
  DfsConfig cfg;
  cfg.relative_ratio = 1.0;
  cfg.power = 2.0;
  Rng rng(32);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(0, 4), b = rng.uniform(0, 4);
    const double d = cfg.discount * a - b;
    REQUIRE(dfs_bonus(cfg, a, b) == Catch::Approx(d * d).margin(1e-12));
  }
}

TEST_CASE("q_log: frozen examples and the q -> 1 limit", "[bonus]") {
  REQUIRE(q_log(1.0, 0.3) == 0.0);
  REQUIRE(q_log(1.0, 1.0) == 0.0);
  REQUIRE(q_log(1.0, 2.7) == 0.0);
  REQUIRE(q_log(2.0, 2.0) == Catch::Approx(0.5).margin(1e-15));
  Rng rng(33);
  for (int i = 0; i < 100; ++i) {
    const double x = rng.uniform(0.05, 8.0);
    REQUIRE(q_log(x, 1.0 + 1e-6) == Catch::Approx(std::log(x)).margin(1e-5));
    REQUIRE(q_log(x, 1.0 - 1e-6) == Catch::Approx(std::log(x)).margin(1e-5));
  }
  REQUIRE_THROWS_AS(q_log(0.0, 1.5), std::invalid_argument);
  REQUIRE_THROWS_AS(q_log(-1.0, 1.5), std::invalid_argument);
}

TEST_CASE("rho: frozen examples", "[bonus]") {
  REQUIRE(rho(-1.7, -1.7, 1.3) == 1.0);
  // exp{(1-1.1)(-2 - (-1))} = exp(0.1)
  REQUIRE(rho(-2.0, -1.0, 1.1) == Catch::Approx(1.1051709180756477).margin(1e-12));
  REQUIRE(rho(-5.0, 2.0, 1.0) == 1.0);  // q = 1 degenerates
}

TEST_CASE("bfs_bonus: frozen examples at the default settings", "[bonus]") {
  BfsConfig cfg;  // behavior_ratio 0.5, power 0.1
  // exp{-0.1(-1 - 0.5*(-2))} = exp(0)
  REQUIRE(bfs_bonus(cfg, -1.0, -2.0) == 1.0);
  REQUIRE(bfs_bonus(cfg, 0.0, 0.0) == 1.0);
  BfsConfig full;
  full.behavior_ratio = 1.0;
  full.power = 0.1;
  const double r = bfs_bonus(full, -2.0, -1.0);
  REQUIRE(r == Catch::Approx(1.1051709180756477).margin(1e-12));
  REQUIRE(r == Catch::Approx(rho(-2.0, -1.0, 1.1)).epsilon(1e-13));
}

TEST_CASE("bfs_bonus: behavior_ratio 1 equals rho at q = 1 + power", "[bonus]") {
  Rng rng(34);
  for (int i = 0; i < 1000; ++i) {
    BfsConfig cfg;
    cfg.behavior_ratio = 1.0;
    cfg.power = rng.uniform(0.01, 2.0);
    const double lp = rng.uniform(-20, 3), lb = rng.uniform(-20, 3);
    const double a = bfs_bonus(cfg, lp, lb);
    const double b = rho(lp, lb, 1.0 + cfg.power);
    REQUIRE(std::abs(a - b) <= 1e-13 * std::max(std::abs(a), std::abs(b)));
  }
}

TEST_CASE("bfs_bonus: positive, monotone both ways, degenerate power", "[bonus]") {
  Rng rng(35);
  for (int i = 0; i < 300; ++i) {
    BfsConfig cfg;
    cfg.behavior_ratio = rng.uniform(0.05, 1.0);
    cfg.power = rng.uniform(0.01, 1.0);
    const double lp = rng.uniform(-10, 2), lb = rng.uniform(-10, 2);
    REQUIRE(bfs_bonus(cfg, lp, lb) > 0.0);
    // less likely now -> larger bonus
    REQUIRE(bfs_bonus(cfg, lp - 0.5, lb) > bfs_bonus(cfg, lp, lb));
    // better-trodden behavior -> larger bonus
    REQUIRE(bfs_bonus(cfg, lp, lb + 0.5) > bfs_bonus(cfg, lp, lb));

    BfsConfig tiny = cfg;
    tiny.power = 1e-9;
    REQUIRE(bfs_bonus(tiny, lp, lb) == Catch::Approx(1.0).margin(1e-6));
  }
}

TEST_CASE("bfs_bonus/rho: exponent clamp keeps results finite", "[bonus]") {
  BfsConfig cfg;
  cfg.power = 2.0;
  cfg.behavior_ratio = 1.0;
  bool clamped = false;
  const double r = bfs_bonus(cfg, -100.0, 50.0, &clamped);
  REQUIRE(clamped);
  REQUIRE(r == Catch::Approx(std::exp(50.0)).epsilon(1e-12));
  clamped = false;
  const double r2 = bfs_bonus(cfg, 100.0, -50.0, &clamped);
  REQUIRE(clamped);
  REQUIRE(r2 == Catch::Approx(std::exp(-50.0)).epsilon(1e-12));
  clamped = false;
  bfs_bonus(cfg, -1.0, -1.0, &clamped);
  REQUIRE_FALSE(clamped);
}

TEST_CASE("self-imitation gradient identity for a 1-D Gaussian policy",
          "[bonus]") {
  // The q-log behavior-cloning loss  L(theta) = -b^(q-1) * q_log(pi(a;theta))
  // must have gradient -rho * d log pi / d theta.
  Rng rng(36);
  for (int i = 0; i < 50; ++i) {
    const double q = 1.0 + rng.uniform(0.02, 1.0);
    const double sigma = rng.uniform(0.4, 2.0);
    const double theta = rng.uniform(-2, 2);
    const double a = theta + rng.uniform(-2, 2);
    const double log_b = rng.uniform(-3, 0);
    const double b_density = std::exp(log_b);

    auto loss = [&](double th) {
      const double pi = std::exp(gauss_log_pdf(a, th, sigma));
      return -std::pow(b_density, q - 1.0) * q_log(pi, q);
    };
    const double h = 1e-5;
    const double fd = (loss(theta + h) - loss(theta - h)) / (2.0 * h);

    const double log_pi = gauss_log_pdf(a, theta, sigma);
    const double dlogpi_dtheta = (a - theta) / (sigma * sigma);
    const double analytic = -rho(log_pi, log_b, q) * dlogpi_dtheta;

    const double err =
        std::abs(analytic - fd) / std::max(std::abs(fd), 1e-6);
    REQUIRE(err < 1e-6);
  }
}
