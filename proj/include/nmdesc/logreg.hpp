#pragma once

#include "nmdesc/linalg.hpp"
#include "nmdesc/problem.hpp"
#include "nmdesc/prox.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace nmdesc {

/// Zero-norm regularized logistic regression data.
///
/// A_tilde is n x (p+1) with rows (a_i^T, 1); the last coordinate of x is the
/// intercept and is never thresholded.
struct LogRegInstance {
  Index n = 0;
  Index p = 0;
  Index s = 0;
  std::uint64_t seed = 0;
  double lambda = 1.0;
  double mu = 1e-10;
  MatrixX<double> A_tilde;
  VectorX<double> b;
  std::vector<Index> support;  ///< planted support S, sorted
  VectorX<double> x_hat;       ///< planted coefficients, length p
};

/// A i.i.d. N(0,1), S a uniform s-subset, x_hat Gaussian on S,
/// b = sign(A x_hat + eps * 1_n) with eps ~ U[0,1] and sign(0) = +1.
LogRegInstance gen_logreg(Index n, Index p, Index s, std::uint64_t seed, double lambda = 1.0,
                          double mu = 1e-10);

/// Throws std::invalid_argument on inconsistent shapes or labels.
void validate(const LogRegInstance& inst);

/// Smooth part sum_i log(1 + exp(-b_i (A_tilde x)_i)) + (mu/2)||x||^2 and,
/// when grad is non-null, its gradient A_tilde^T d + mu x.
double logreg_value_grad(const VectorX<double>& x, const LogRegInstance& inst, VectorX<double>* grad);

/// log(1 + exp(t)) without overflow.
inline double log1pexp(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

enum class LogRegLipschitz {
  conservative,  ///< ||A_tilde||^2 / 4 + mu, a valid bound
  paper          ///< ||A_tilde|| / 4, smaller and not a gradient bound in general
};

std::string to_string(LogRegLipschitz rule);

class LogRegProblem final : public CompositeProblem<double> {
 public:
  explicit LogRegProblem(LogRegInstance inst, LogRegLipschitz rule = LogRegLipschitz::conservative);

  Index dimension() const override { return inst_.p + 1; }
  double smooth_value(const Vector& x) const override;
  double smooth_value_grad(const Vector& x, Vector& grad) const override;
  double nonsmooth_value(const Vector& x) const override;
  Vector prox(const Vector& v, double tau) const override;
  double lipschitz() const override { return lipschitz_; }
  /// 10 / ||A_tilde||.
  double initial_step() const override { return 10.0 / a_norm_; }

  const LogRegInstance& instance() const { return inst_; }
  const ProxSpec<double>& prox_spec() const { return spec_; }
  double a_norm() const { return a_norm_; }
  LogRegLipschitz lipschitz_rule() const { return rule_; }

 private:
  LogRegInstance inst_;
  ProxSpec<double> spec_;
  LogRegLipschitz rule_;
  double a_norm_;
  double lipschitz_;
};

/// ||x~||_0, the support size without the intercept.
Index support_size(const VectorX<double>& x);

}  // namespace nmdesc
