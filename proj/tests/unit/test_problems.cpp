#include "nmdesc/instance_io.hpp"
#include "nmdesc/logreg.hpp"
#include "nmdesc/matcomp.hpp"
#include "nmdesc/toy_problems.hpp"

#include "../oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace nmdesc;

TEST_SUITE("problems") {
  TEST_CASE("log1pexp is accurate at both extremes") {
    CHECK(log1pexp(0.0) == doctest::Approx(std::log(2.0)));
    CHECK(log1pexp(800.0) == doctest::Approx(800.0));
    CHECK(log1pexp(-800.0) >= 0.0);
    CHECK(log1pexp(-40.0) == doctest::Approx(std::exp(-40.0)).epsilon(1e-12));
    CHECK(std::isfinite(log1pexp(1e308)));
  }

  TEST_CASE("logistic instance structure") {
    const auto inst = gen_logreg(30, 50, 5, 7, 0.5);
    CHECK_NOTHROW(validate(inst));
    CHECK(inst.A_tilde.rows() == 30);
    CHECK(inst.A_tilde.cols() == 51);
    CHECK((inst.A_tilde.col(50).array() == 1.0).all());
    CHECK(inst.support.size() == 5);
    CHECK(std::is_sorted(inst.support.begin(), inst.support.end()));
    CHECK(support_size(inst.x_hat) == 5);
    for (Index i : inst.support) CHECK(inst.x_hat(i) != 0.0);
    const auto again = gen_logreg(30, 50, 5, 7, 0.5);
    CHECK(again.A_tilde == inst.A_tilde);
    CHECK(again.b == inst.b);
    CHECK(gen_logreg(30, 50, 5, 8, 0.5).A_tilde != inst.A_tilde);
    CHECK_THROWS_AS(gen_logreg(30, 5, 6, 1), std::invalid_argument);
  }

  TEST_CASE("labels are the signs of the shifted planted scores") {
    const auto inst = gen_logreg(40, 60, 6, 3);
    const Eigen::VectorXd score = inst.A_tilde.leftCols(60) * inst.x_hat;
    // one shared shift eps in [0, 1) explains every label
    double lo = 0.0, hi = 1.0;
    for (Index i = 0; i < 40; ++i) {
      if (inst.b(i) > 0)
        lo = std::max(lo, -score(i));
      else
        hi = std::min(hi, -score(i));
    }
    CHECK(lo < hi);
  }

  TEST_CASE("logistic gradient matches central differences") {
    const auto inst = gen_logreg(20, 30, 4, 11, 1.0, 0.3);
    RngStream rng(99);
    for (int probe = 0; probe < 20; ++probe) {
      const Eigen::VectorXd x = gaussian_fill(rng, 31, 1) * 0.5;
      Eigen::VectorXd grad;
      logreg_value_grad(x, inst, &grad);
      const Eigen::MatrixXd dir = gaussian_fill(rng, 31, 1).normalized();
      const auto f = [&](const Eigen::MatrixXd& z) { return logreg_value_grad(Eigen::VectorXd(z), inst, nullptr); };
      CHECK(oracle::central_difference_error(f, x, grad, dir, 1e-5) < 1e-7);
    }
  }

  TEST_CASE("logistic Lipschitz constants bound gradient differences") {
    const auto inst = gen_logreg(25, 40, 4, 2, 1.0, 1e-3);
    const LogRegProblem conservative(inst);
    const LogRegProblem paper(inst, LogRegLipschitz::paper);
    const double a_norm = conservative.a_norm();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(inst.A_tilde);
    CHECK(a_norm == doctest::Approx(svd.singularValues()(0)).epsilon(1e-6));
    CHECK(conservative.lipschitz() == doctest::Approx(0.25 * a_norm * a_norm + 1e-3).epsilon(1e-6));
    CHECK(paper.lipschitz() == doctest::Approx(0.25 * a_norm).epsilon(1e-6));
    CHECK(conservative.initial_step() == doctest::Approx(10.0 / a_norm));
    RngStream rng(4);
    for (int i = 0; i < 50; ++i) {
      const Eigen::VectorXd x = gaussian_fill(rng, 41, 1), y = gaussian_fill(rng, 41, 1);
      Eigen::VectorXd gx, gy;
      conservative.smooth_value_grad(x, gx);
      conservative.smooth_value_grad(y, gy);
      CHECK((gx - gy).norm() <= conservative.lipschitz() * (x - y).norm() * (1 + 1e-9));
    }
  }

  TEST_CASE("logistic prox leaves the intercept alone") {
    auto inst = gen_logreg(10, 5, 2, 1, 10.0);
    const LogRegProblem prob(inst);
    Eigen::VectorXd v = Eigen::VectorXd::Constant(6, 0.1);
    const Eigen::VectorXd x = prob.prox(v, 1.0);
    CHECK(x.head(5).isZero(0));
    CHECK(x(5) == 0.1);
    CHECK(prob.nonsmooth_value(v) == doctest::Approx(50.0));
  }

  TEST_CASE("sampling marginals") {
    const auto p = mc_marginals(200);
    double total = 0;
    for (double v : p) total += v;
    CHECK(total == doctest::Approx(1.0));
    // 1-based k: 2 p0 for k < 20, 4 p0 for 20 <= k <= 40, p0 beyond
    const double p0 = 1.0 / (19 * 2 + 21 * 4 + 160);
    CHECK(p[0] == doctest::Approx(2 * p0));
    CHECK(p[18] == doctest::Approx(2 * p0));
    CHECK(p[19] == doctest::Approx(4 * p0));
    CHECK(p[39] == doctest::Approx(4 * p0));
    CHECK(p[40] == doctest::Approx(p0));
    CHECK_THROWS_AS(mc_marginals(0), std::invalid_argument);
  }

  TEST_CASE("observed row frequencies follow the marginals") {
    const Index n = 2000;
    const auto inst = gen_mc(n, n, 2, 10000, 0.0, 17);
    const auto p = mc_marginals(n);
    double expect_heavy = 0, expect_mid = 0;
    for (Index k = 0; k < n; ++k) {
      if (k < 199) expect_mid += p[k];
      else if (k < 400) expect_heavy += p[k];
    }
    double heavy = 0, mid = 0;
    for (const auto& [i, j] : inst.omega) {
      if (i < 199) mid += 1;
      else if (i < 400) heavy += 1;
    }
    const double m = static_cast<double>(inst.omega.size());
    CHECK(m > 9800);
    CHECK(std::abs(heavy / m - expect_heavy) < 0.02);
    CHECK(std::abs(mid / m - expect_mid) < 0.02);
  }

  TEST_CASE("matrix completion instance") {
    const auto inst = gen_mc(60, 50, 3, 800, 0.1, 3, 6, 2.0);
    CHECK_NOTHROW(validate(inst));
    CHECK(inst.omega.size() <= 800);
    CHECK(std::is_sorted(inst.omega.begin(), inst.omega.end()));
    CHECK(std::adjacent_find(inst.omega.begin(), inst.omega.end()) == inst.omega.end());
    // the noise is scaled to sigma ||M*_Omega||
    Eigen::VectorXd clean(inst.omega.size());
    for (std::size_t t = 0; t < inst.omega.size(); ++t)
      clean(t) = inst.U_star.row(inst.omega[t].first).dot(inst.V_star.row(inst.omega[t].second));
    CHECK((inst.m_obs - clean).norm() == doctest::Approx(0.1 * clean.norm()).epsilon(1e-12));
    const auto noiseless = gen_mc(60, 50, 3, 800, 0.0, 3, 6);
    CHECK((noiseless.m_obs - clean).norm() == 0.0);
    CHECK_THROWS_AS(gen_mc(10, 10, 11, 50, 0.1, 1), std::invalid_argument);
    CHECK_THROWS_AS(gen_mc(10, 10, 2, 101, 0.1, 1), std::invalid_argument);
  }

  TEST_CASE("matrix completion gradients match central differences") {
    const auto inst = gen_mc(15, 12, 2, 90, 0.1, 5, 3);
    RngStream rng(31);
    for (int probe = 0; probe < 20; ++probe) {
      const Eigen::MatrixXd U = gaussian_fill(rng, 15, 3), V = gaussian_fill(rng, 12, 3);
      const auto ev = mc_H_and_grads(U, V, inst);
      const Eigen::MatrixXd dU = gaussian_fill(rng, 15, 3).normalized();
      const Eigen::MatrixXd dV = gaussian_fill(rng, 12, 3).normalized();
      const auto fu = [&](const Eigen::MatrixXd& z) { return mc_H_and_grads(z, V, inst).H; };
      const auto fv = [&](const Eigen::MatrixXd& z) { return mc_H_and_grads(U, z, inst).H; };
      CHECK(oracle::central_difference_error(fu, U, ev.grad_U, dU, 1e-5) < 1e-7);
      CHECK(oracle::central_difference_error(fv, V, ev.grad_V, dV, 1e-5) < 1e-7);
      CHECK(ev.L1 == doctest::Approx(std::pow(Eigen::JacobiSVD<Eigen::MatrixXd>(V).singularValues()(0), 2)));
      CHECK(ev.L2 == doctest::Approx(std::pow(Eigen::JacobiSVD<Eigen::MatrixXd>(U).singularValues()(0), 2)));
    }
  }

  TEST_CASE("squared spectral norm of tall and wide matrices") {
    RngStream rng(1);
    for (auto [r, c] : {std::pair{30, 4}, std::pair{4, 30}, std::pair{7, 7}}) {
      const Eigen::MatrixXd x = gaussian_fill(rng, r, c);
      const double s = Eigen::JacobiSVD<Eigen::MatrixXd>(x).singularValues()(0);
      CHECK(squared_spectral_norm(x) == doctest::Approx(s * s).epsilon(1e-12));
    }
    CHECK(squared_spectral_norm(Eigen::MatrixXd::Zero(3, 2)) == 0.0);
  }

  TEST_CASE("matrix completion problem wiring") {
    const auto inst = gen_mc(20, 20, 2, 150, 0.1, 9, 4, 0.5, 0.01);
    const McProblem prob(inst);
    const auto [U, V] = mc_initial_point(inst, 4);
    CHECK(U.rows() == 20);
    CHECK(U.cols() == 4);
    const double expected =
        mc_H_and_grads(U, V, inst).H + 0.005 * (U.squaredNorm() + V.squaredNorm()) + 0.5 * 8;
    CHECK(prob.objective(U, V) == doctest::Approx(expected));
    const auto again = mc_initial_point(inst, 4);
    CHECK(again.first == U);
    const auto rank = factor_rank(U, Eigen::MatrixXd::Zero(20, 4));
    CHECK(rank.u_columns == 4);
    CHECK(rank.v_columns == 0);
    const auto bounds = prob.coupling_bounds(2.0, 3.0);
    CHECK(bounds.max_lipschitz_y == doctest::Approx(4.0));
    CHECK(bounds.joint_lipschitz_x >= 9.0);
  }

  TEST_CASE("instances round-trip through the text format bit for bit") {
    const Instance lr = gen_logreg(8, 12, 3, 21, 0.25, 1e-10);
    std::stringstream a;
    write_instance(a, lr);
    const Instance lr_back = read_instance(a);
    const auto& x = std::get<LogRegInstance>(lr);
    const auto& y = std::get<LogRegInstance>(lr_back);
    CHECK(x.A_tilde == y.A_tilde);
    CHECK(x.b == y.b);
    CHECK(x.x_hat == y.x_hat);
    CHECK(x.support == y.support);
    CHECK(x.lambda == y.lambda);
    CHECK(instance_digest(lr) == instance_digest(lr_back));

    const Instance mc = gen_mc(9, 7, 2, 30, 0.2, 5, 3, 1.5);
    std::stringstream b;
    write_instance(b, mc);
    const Instance mc_back = read_instance(b);
    const auto& u = std::get<McInstance>(mc);
    const auto& v = std::get<McInstance>(mc_back);
    CHECK(u.omega == v.omega);
    CHECK(u.m_obs == v.m_obs);
    CHECK(u.U_star == v.U_star);
    CHECK(u.lambda == v.lambda);
    std::stringstream again;
    write_instance(again, mc_back);
    std::stringstream first;
    write_instance(first, mc);
    CHECK(again.str() == first.str());
  }

  TEST_CASE("malformed instance files are rejected") {
    std::istringstream empty("");
    CHECK_THROWS_AS(read_instance(empty), InstanceFormatError);
    std::istringstream wrong("nmdesc-instance 9 logreg\n");
    CHECK_THROWS_AS(read_instance(wrong), InstanceFormatError);
    std::stringstream good;
    write_instance(good, Instance(gen_logreg(3, 4, 1, 1)));
    std::string text = good.str();
    text.resize(text.size() / 2);
    std::istringstream truncated(text);
    CHECK_THROWS_AS(read_instance(truncated), InstanceFormatError);
  }

  TEST_CASE("quadratic toys") {
    RngStream rng(2);
    const auto q = random_quadratic(rng, 5, 1.0, ProxSpec<double>{});
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q.q());
    CHECK(q.lipschitz() == doctest::Approx(eig.eigenvalues().maxCoeff()));
    CHECK(eig.eigenvalues().minCoeff() >= 1.0 - 1e-12);
    Eigen::MatrixXd b(2, 2);
    b << 3, 0, 0, 4;
    const QuadraticBlocks<double> blocks(1.0, 2.0, b);
    CHECK(blocks.coupling_bounds(0, 0).joint_lipschitz_x == doctest::Approx(std::sqrt(1.0 + 16.0)));
    CHECK_THROWS_AS(QuadraticBlocks<double>(-1.0, 1.0, b), std::invalid_argument);
  }
}
