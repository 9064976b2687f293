#include "nmdesc/diagnostics.hpp"
#include "nmdesc/palm.hpp"
#include "nmdesc/toy_problems.hpp"

#include <doctest.h>

#include <cmath>

using namespace nmdesc;
using Block = Eigen::MatrixXd;

namespace {

Block scalar(double v) { return Block::Constant(1, 1, v); }

ProxSpec<double> ridge(double lambda, double mu) {
  ProxSpec<double> s;
  s.kind = ProxKind::ridge_l20_columns;
  s.lambda = lambda;
  s.mu = mu;
  return s;
}

}  // namespace

TEST_SUITE("palm-solver") {
  TEST_CASE("PALM on a bilinear scalar problem follows the Gauss-Seidel recursion") {
    // H = x^2 + 1.5 y^2 + x y: x+ = -y / 2, then y+ = -x+ / 3 with the new x
    const QuadraticBlocks<double> prob(2.0, 3.0, scalar(1.0));
    PalmBaselineConfig<double> c;
    c.max_iters = 6;
    c.stop_tol = 0;
    const auto res = run_palm_baseline(prob, scalar(1.0), scalar(1.0), c);
    double x = 1.0, y = 1.0, x_old_rule = 1.0, y_old_rule = 1.0;
    for (int k = 1; k <= 6; ++k) {
      x = -y / 2.0;
      y = -x / 3.0;
      const double xo = -y_old_rule / 2.0;
      y_old_rule = -x_old_rule / 3.0;  // Jacobi update with the previous x
      x_old_rule = xo;
      const double expected = x * x + 1.5 * y * y + x * y;
      CHECK(res.trace[k].objective == doctest::Approx(expected).epsilon(1e-14));
      if (k == 1) CHECK(std::abs(y - y_old_rule) > 0.1);
    }
    CHECK(res.y(0, 0) == doctest::Approx(y).epsilon(1e-14));
  }

  TEST_CASE("the line-search y-step uses the new x") {
    const QuadraticBlocks<double> prob(2.0, 3.0, scalar(1.0));
    PalmConfig<double> c;
    c.tau1_init = 0.5;  // exactly 1/L1
    c.tau2_init = 1.0 / 3.0;
    c.bb_steps = false;
    auto s = init_palm_state(prob, scalar(1.0), scalar(1.0), c.memory);
    const auto rec = palm_step(s, prob, c);
    CHECK(rec.backtracks == 0);
    CHECK(s.x(0, 0) == doctest::Approx(-0.5));
    CHECK(s.y(0, 0) == doctest::Approx(0.5 / 3.0));
  }

  TEST_CASE("PALMe without extrapolation reproduces PALM") {
    RngStream rng(5);
    const Block coupling = gaussian_fill(rng, 4, 3);
    const QuadraticBlocks<double> prob(1.0, 2.0, coupling, ridge(0.05, 0.1), ridge(0.05, 0.1));
    const Block x0 = gaussian_fill(rng, 4, 2), y0 = gaussian_fill(rng, 3, 2);
    PalmBaselineConfig<double> palm;
    palm.max_iters = 50;
    PalmBaselineConfig<double> palme = palm;
    palme.beta_max = 1.0;
    const auto a = run_palm_baseline(prob, x0, y0, palm);
    palme.beta_max = 0.0;
    const auto b = run_palm_baseline(prob, x0, y0, palme);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) CHECK(a.trace[i].objective == b.trace[i].objective);
    palme.beta_max = 1.0;
    const auto e = run_palm_baseline(prob, x0, y0, palme);
    bool differs = false;
    for (std::size_t i = 0; i < std::min(a.trace.size(), e.trace.size()); ++i)
      differs = differs || a.trace[i].objective != e.trace[i].objective;
    CHECK(differs);
  }

  TEST_CASE("safe extrapolation bound for two blocks") {
    const double delta = 0.01;
    const auto term = [&](double tau, double lip) {
      const double g = 1.0 / tau - lip - delta;
      return std::sqrt(0.25 * delta * g / (lip * g + (1.0 / tau - lip) * (1.0 / tau - lip)));
    };
    CHECK(safe_beta_bound_palm(0.1, 0.2, 1.0, 2.0, delta) == doctest::Approx(std::min(term(0.1, 1.0), term(0.2, 2.0))));
    CHECK(safe_beta_bound_palm(1.0, 0.1, 1.0, 1.0, delta) == 0.0);
  }

  TEST_CASE("two-block backtrack bound") {
    // both steps safe, no extrapolation
    CHECK(palm_backtrack_bound(0.0, 0.1, 0.1, 1.0, 1.0, 1e-5, 0.01, 0.01, 0.5, 0.5, 1e-8) == 1);
    // tau1 = 8 needs four halvings to get below 1/1.01002
    CHECK(palm_backtrack_bound(0.0, 8.0, 0.1, 1.0, 1.0, 1e-5, 0.01, 0.01, 0.5, 0.5, 1e-8) == 5);
    // floors above the safe step
    CHECK(palm_backtrack_bound(0.0, 8.0, 8.0, 1.0, 1.0, 1e-5, 0.01, 0.01, 0.5, 0.5, 2.0) == -1);
  }

  TEST_CASE("witness equals the gradient of the potential without regularizers") {
    RngStream rng(21);
    const Block coupling = gaussian_fill(rng, 3, 3) * 0.3;
    const QuadraticBlocks<double> prob(1.0, 1.5, coupling);
    PalmConfig<double> c;
    auto s = init_palm_state(prob, Block(gaussian_fill(rng, 3, 2)), Block(gaussian_fill(rng, 3, 2)), c.memory);
    c.tau1_init = 0.5;
    c.tau2_init = 0.5;
    for (int k = 0; k < 6; ++k) {
      palm_step(s, prob, c);
      const auto w = subgrad_witness_palm(s, c.delta);
      const Block gx = prob.coupling_grad_x(s.x, s.y) + c.delta * (s.x - s.x_prev);
      const Block gy = prob.coupling_grad_y(s.x, s.y) + c.delta * (s.y - s.y_prev);
      CHECK((w.wx - gx).norm() <= 1e-10 * (1 + gx.norm()));
      CHECK((w.wy - gy).norm() <= 1e-10 * (1 + gy.norm()));
      CHECK((w.wu - c.delta * (s.x_prev - s.x)).norm() <= 1e-15);
    }
  }

  TEST_CASE("variants satisfy H1 and H2 on a regularized bilinear problem") {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      RngStream rng(seed);
      // scaled so that the smooth part stays bounded below
      Block coupling = gaussian_fill(rng, 5, 4);
      coupling *= 0.4 / spectral_norm(coupling);
      const QuadraticBlocks<double> prob(0.5, 0.5, coupling, ridge(0.2, 0.1), ridge(0.2, 0.1));
      const Block x0 = gaussian_fill(rng, 5, 3), y0 = gaussian_fill(rng, 4, 3);
      for (auto v : {PalmVariant::palmenls, PalmVariant::palmnls, PalmVariant::palmels, PalmVariant::palmls}) {
        auto cfg = with_variant(PalmConfig<double>{}, v);
        cfg.max_iters = 300;
        const auto res = run_palm(prob, x0, y0, cfg);
        REQUIRE(res.stop != StopReason::backtrack_limit);
        CHECK(verify_H1(res.trace, cfg.memory, cfg.alpha / 2).pass);
        const auto bounds = prob.coupling_bounds(0, 0);
        const double b = palm_witness_constant(bounds.joint_lipschitz_x, bounds.max_lipschitz_y, cfg.tau_lo,
                                               cfg.beta_max, cfg.delta);
        const auto h2 = verify_H2(res.trace, b);
        INFO("seed ", seed, " max ratio ", h2.max_ratio);
        CHECK(h2.pass);
        for (std::size_t i = 1; i < res.trace.size(); ++i) {
          const auto& r = res.trace[i];
          const auto bound = palm_backtrack_bound(r.beta0, r.tau1_0, r.tau2_0, r.lipschitz_x, r.lipschitz_y_max,
                                                  cfg.alpha, cfg.delta, cfg.eta, cfg.eta1, cfg.eta2, cfg.tau_lo);
          if (bound >= 0) CHECK(r.backtracks <= bound);
        }
      }
    }
  }

  TEST_CASE("configuration checks") {
    PalmConfig<double> c;
    CHECK_NOTHROW(c.validate(10.0));
    c.alpha = 0.5;
    CHECK_THROWS_AS(c.validate(10.0), std::invalid_argument);
    c = PalmConfig<double>{};
    c.tau_lo = 1.0;
    CHECK_THROWS_AS(c.validate(10.0), std::invalid_argument);
    const auto nls = with_variant(PalmConfig<double>{}, PalmVariant::palmls);
    CHECK(nls.memory == 0);
    CHECK(nls.beta_max == 0.0);
  }

  TEST_CASE("initial steps are reciprocal block moduli") {
    const QuadraticBlocks<double> prob(4.0, 0.0, scalar(0.0));
    const auto [t1, t2] = palm_initial_steps(prob, scalar(1.0), scalar(1.0), 1e8);
    CHECK(t1 == 0.25);
    CHECK(t2 == 1e8);
  }
}
