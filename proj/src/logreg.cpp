#include "nmdesc/logreg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace nmdesc {

LogRegInstance gen_logreg(Index n, Index p, Index s, std::uint64_t seed, double lambda, double mu) {
  if (n < 1 || p < 1) throw std::invalid_argument("gen_logreg: need n >= 1 and p >= 1");
  if (s < 0 || s > p) throw std::invalid_argument("gen_logreg: need 0 <= s <= p");
  RngStream rng(seed);
  LogRegInstance inst;
  inst.n = n;
  inst.p = p;
  inst.s = s;
  inst.seed = seed;
  inst.lambda = lambda;
  inst.mu = mu;

  const MatrixX<double> a = gaussian_fill(rng, n, p);

  // partial Fisher-Yates: the first s entries of perm form the support
  std::vector<Index> perm(static_cast<std::size_t>(p));
  std::iota(perm.begin(), perm.end(), Index(0));
  for (Index i = 0; i < s; ++i) {
    const auto j = i + static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(p - i)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  inst.support.assign(perm.begin(), perm.begin() + s);
  std::sort(inst.support.begin(), inst.support.end());

  inst.x_hat = VectorX<double>::Zero(p);
  for (Index i : inst.support) {
    double v = rng.normal();
    while (v == 0.0) v = rng.normal();
    inst.x_hat(i) = v;
  }
  const double eps = rng.uniform();
  const VectorX<double> score = (a * inst.x_hat).array() + eps;
  inst.b = score.unaryExpr([](double t) { return t >= 0.0 ? 1.0 : -1.0; });

  inst.A_tilde.resize(n, p + 1);
  inst.A_tilde.leftCols(p) = a;
  inst.A_tilde.col(p).setOnes();
  return inst;
}

void validate(const LogRegInstance& inst) {
  if (inst.A_tilde.rows() != inst.n || inst.A_tilde.cols() != inst.p + 1)
    throw std::invalid_argument("LogRegInstance: A_tilde must be n x (p+1)");
  if (inst.b.size() != inst.n) throw std::invalid_argument("LogRegInstance: b must have length n");
  if (!((inst.b.array() == 1.0) || (inst.b.array() == -1.0)).all())
    throw std::invalid_argument("LogRegInstance: labels must be +1 or -1");
  if (!(inst.A_tilde.col(inst.p).array() == 1.0).all())
    throw std::invalid_argument("LogRegInstance: last column of A_tilde must be ones");
  if (!inst.A_tilde.allFinite()) throw std::invalid_argument("LogRegInstance: non-finite data");
  if (!(inst.lambda >= 0.0) || !(inst.mu >= 0.0) || !std::isfinite(inst.lambda) || !std::isfinite(inst.mu))
    throw std::invalid_argument("LogRegInstance: lambda and mu must be finite and nonnegative");
}

double logreg_value_grad(const VectorX<double>& x, const LogRegInstance& inst, VectorX<double>* grad) {
  if (x.size() != inst.p + 1) throw std::invalid_argument("logreg_value_grad: x must have length p+1");
  const VectorX<double> margin = inst.b.cwiseProduct(inst.A_tilde * x);
  double value = 0.0;
  for (Index i = 0; i < margin.size(); ++i) value += log1pexp(-margin(i));
  value += 0.5 * inst.mu * x.squaredNorm();
  if (grad) {
    // d_i = -b_i / (1 + exp(b_i (A x)_i)); exp overflow gives d_i = -0 as it should
    const VectorX<double> d =
        (-inst.b.array() / (1.0 + margin.array().exp())).matrix();
    *grad = inst.A_tilde.transpose() * d + inst.mu * x;
  }
  return value;
}

std::string to_string(LogRegLipschitz rule) {
  return rule == LogRegLipschitz::conservative ? "conservative" : "paper";
}

LogRegProblem::LogRegProblem(LogRegInstance inst, LogRegLipschitz rule) : inst_(std::move(inst)), rule_(rule) {
  validate(inst_);
  spec_.kind = ProxKind::l0_vector;
  spec_.lambda = inst_.lambda;
  spec_.skip = {inst_.p};
  a_norm_ = spectral_norm(inst_.A_tilde);
  lipschitz_ = rule_ == LogRegLipschitz::conservative ? 0.25 * a_norm_ * a_norm_ + inst_.mu : 0.25 * a_norm_;
}

double LogRegProblem::smooth_value(const Vector& x) const { return logreg_value_grad(x, inst_, nullptr); }

double LogRegProblem::smooth_value_grad(const Vector& x, Vector& grad) const {
  return logreg_value_grad(x, inst_, &grad);
}

double LogRegProblem::nonsmooth_value(const Vector& x) const { return l0_penalty(x, spec_); }

LogRegProblem::Vector LogRegProblem::prox(const Vector& v, double tau) const { return prox_l0(v, tau, spec_); }

Index support_size(const VectorX<double>& x) {
  if (x.size() == 0) return 0;
  return static_cast<Index>((x.head(x.size() - 1).array() != 0.0).count());
}

}  // namespace nmdesc
