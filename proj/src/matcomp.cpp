#include "nmdesc/matcomp.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace nmdesc {

std::vector<double> mc_marginals(Index n) {
  if (n < 1) throw std::invalid_argument("mc_marginals: n must be positive");
  std::vector<double> p(static_cast<std::size_t>(n));
  double total = 0.0;
  for (Index k = 1; k <= n; ++k) {
    double w = 1.0;
    if (10 * k >= n && 5 * k <= n)
      w = 4.0;
    else if (10 * k <= n)
      w = 2.0;
    p[static_cast<std::size_t>(k - 1)] = w;
    total += w;
  }
  for (double& v : p) v /= total;
  return p;
}

namespace {

Index draw_from_cdf(const std::vector<double>& cdf, RngStream& rng) {
  const double u = rng.uniform() * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  const auto idx = static_cast<Index>(it - cdf.begin());
  return std::min(idx, static_cast<Index>(cdf.size()) - 1);
}

std::vector<double> cumulative(const std::vector<double>& p) {
  std::vector<double> cdf(p.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    cdf[i] = acc;
  }
  return cdf;
}

}  // namespace

McInstance gen_mc(Index n1, Index n2, Index r_star, Index num_samples, double sigma, std::uint64_t seed, Index r,
                  double lambda, double mu) {
  if (n1 < 1 || n2 < 1) throw std::invalid_argument("gen_mc: dimensions must be positive");
  if (r_star < 1 || r_star > std::min(n1, n2)) throw std::invalid_argument("gen_mc: need 1 <= r_star <= min(n1,n2)");
  if (r < 1 || r > std::min(n1, n2)) throw std::invalid_argument("gen_mc: need 1 <= r <= min(n1,n2)");
  if (num_samples < 1 || num_samples > n1 * n2) throw std::invalid_argument("gen_mc: need 1 <= samples <= n1*n2");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("gen_mc: sigma must be finite and >= 0");

  RngStream rng(seed);
  McInstance inst;
  inst.n1 = n1;
  inst.n2 = n2;
  inst.r_star = r_star;
  inst.r = r;
  inst.num_samples = num_samples;
  inst.sigma = sigma;
  inst.seed = seed;
  inst.lambda = lambda;
  inst.mu = mu;
  inst.U_star = gaussian_fill(rng, n1, r_star);
  inst.V_star = gaussian_fill(rng, n2, r_star);

  const std::vector<double> cdf_rows = cumulative(mc_marginals(n1));
  const std::vector<double> cdf_cols = cumulative(mc_marginals(n2));
  std::set<std::pair<Index, Index>> seen;
  for (Index t = 0; t < num_samples; ++t) {
    const Index i = draw_from_cdf(cdf_rows, rng);
    const Index j = draw_from_cdf(cdf_cols, rng);
    seen.emplace(i, j);
  }
  inst.omega.assign(seen.begin(), seen.end());

  const auto count = static_cast<Index>(inst.omega.size());
  VectorX<double> truth(count);
  for (Index t = 0; t < count; ++t) {
    const auto [i, j] = inst.omega[static_cast<std::size_t>(t)];
    truth(t) = inst.U_star.row(i).dot(inst.V_star.row(j));
  }
  VectorX<double> xi(count);
  for (Index t = 0; t < count; ++t) xi(t) = rng.normal();
  inst.m_obs = truth + sigma * (xi / xi.norm()) * truth.norm();
  return inst;
}

void validate(const McInstance& inst) {
  if (inst.n1 < 1 || inst.n2 < 1 || inst.r < 1) throw std::invalid_argument("McInstance: bad dimensions");
  if (static_cast<Index>(inst.omega.size()) != inst.m_obs.size())
    throw std::invalid_argument("McInstance: omega and observations differ in length");
  for (const auto& [i, j] : inst.omega)
    if (i < 0 || i >= inst.n1 || j < 0 || j >= inst.n2)
      throw std::invalid_argument("McInstance: omega index out of range");
  if (!inst.m_obs.allFinite()) throw std::invalid_argument("McInstance: non-finite observation");
  if (!(inst.lambda >= 0.0) || !(inst.mu >= 0.0)) throw std::invalid_argument("McInstance: lambda, mu must be >= 0");
}

namespace {

VectorX<double> residual_on_omega(const MatrixX<double>& U, const MatrixX<double>& V, const McInstance& inst) {
  const auto count = static_cast<Index>(inst.omega.size());
  VectorX<double> res(count);
  for (Index t = 0; t < count; ++t) {
    const auto [i, j] = inst.omega[static_cast<std::size_t>(t)];
    res(t) = U.row(i).dot(V.row(j)) - inst.m_obs(t);
  }
  return res;
}

void check_shapes(const MatrixX<double>& U, const MatrixX<double>& V, const McInstance& inst) {
  if (U.rows() != inst.n1 || V.rows() != inst.n2 || U.cols() != V.cols())
    throw std::invalid_argument("matrix completion: factor shapes do not match the instance");
}

}  // namespace

double squared_spectral_norm(const MatrixX<double>& X) {
  if (X.size() == 0) return 0.0;
  const MatrixX<double> gram = X.transpose() * X;
  Eigen::SelfAdjointEigenSolver<MatrixX<double>> eig(gram, Eigen::EigenvaluesOnly);
  return std::max(eig.eigenvalues().maxCoeff(), 0.0);
}

McEval mc_H_and_grads(const MatrixX<double>& U, const MatrixX<double>& V, const McInstance& inst) {
  check_shapes(U, V, inst);
  const VectorX<double> res = residual_on_omega(U, V, inst);
  McEval out;
  out.H = 0.5 * res.squaredNorm();
  out.grad_U = MatrixX<double>::Zero(U.rows(), U.cols());
  out.grad_V = MatrixX<double>::Zero(V.rows(), V.cols());
  for (Index t = 0; t < res.size(); ++t) {
    const auto [i, j] = inst.omega[static_cast<std::size_t>(t)];
    out.grad_U.row(i) += res(t) * V.row(j);
    out.grad_V.row(j) += res(t) * U.row(i);
  }
  out.L1 = squared_spectral_norm(V);
  out.L2 = squared_spectral_norm(U);
  return out;
}

McProblem::McProblem(McInstance inst) : inst_(std::move(inst)) {
  validate(inst_);
  spec_.kind = ProxKind::ridge_l20_columns;
  spec_.lambda = inst_.lambda;
  spec_.mu = inst_.mu;
  m_obs_norm_ = inst_.m_obs.norm();
}

VectorX<double> McProblem::residual(const Block& U, const Block& V) const {
  check_shapes(U, V, inst_);
  return residual_on_omega(U, V, inst_);
}

double McProblem::coupling_value(const Block& x, const Block& y) const { return 0.5 * residual(x, y).squaredNorm(); }

McProblem::Block McProblem::coupling_grad_x(const Block& x, const Block& y) const {
  const VectorX<double> res = residual(x, y);
  Block g = Block::Zero(x.rows(), x.cols());
  for (Index t = 0; t < res.size(); ++t) {
    const auto [i, j] = inst_.omega[static_cast<std::size_t>(t)];
    g.row(i) += res(t) * y.row(j);
  }
  return g;
}

McProblem::Block McProblem::coupling_grad_y(const Block& x, const Block& y) const {
  const VectorX<double> res = residual(x, y);
  Block g = Block::Zero(y.rows(), y.cols());
  for (Index t = 0; t < res.size(); ++t) {
    const auto [i, j] = inst_.omega[static_cast<std::size_t>(t)];
    g.row(j) += res(t) * x.row(i);
  }
  return g;
}

CouplingBounds<double> McProblem::coupling_bounds(double radius_x, double radius_y) const {
  const double cross = 2.0 * radius_x * radius_y + m_obs_norm_;
  return {std::sqrt(std::pow(radius_y, 4) + cross * cross), radius_x * radius_x};
}

std::pair<MatrixX<double>, MatrixX<double>> mc_initial_point(const McInstance& inst, std::uint64_t seed) {
  RngStream rng(seed);
  const double count = std::max<double>(1.0, static_cast<double>(inst.omega.size()));
  const double scale = std::pow(inst.m_obs.squaredNorm() / (count * static_cast<double>(inst.r)), 0.25);
  const double c = scale > 0.0 ? scale : 1.0;
  MatrixX<double> U = c * gaussian_fill(rng, inst.n1, inst.r);
  MatrixX<double> V = c * gaussian_fill(rng, inst.n2, inst.r);
  return {std::move(U), std::move(V)};
}

FactorRank factor_rank(const MatrixX<double>& U, const MatrixX<double>& V) {
  return {nonzero_columns(U), nonzero_columns(V)};
}

}  // namespace nmdesc
