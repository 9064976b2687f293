#pragma once

#include "nmdesc/linalg.hpp"
#include "nmdesc/problem.hpp"
#include "nmdesc/prox.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace nmdesc {

/// Observed entries of a noisy low-rank matrix under non-uniform sampling.
struct McInstance {
  Index n1 = 0;
  Index n2 = 0;
  Index r_star = 0;
  Index r = 0;  ///< factor width used by the solver
  Index num_samples = 0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  double lambda = 1.0;
  double mu = 1e-10;
  std::vector<std::pair<Index, Index>> omega;  ///< sorted, unique, 0-based
  VectorX<double> m_obs;                        ///< observation for each omega entry
  MatrixX<double> U_star;                       ///< n1 x r_star
  MatrixX<double> V_star;                       ///< n2 x r_star
};

/// Row (or column) marginals: p_k = 4 p0 for n/10 <= k <= n/5, 2 p0 for
/// k <= n/10, p0 otherwise (1-based k), normalized to sum to one.
std::vector<double> mc_marginals(Index n);

/// Draws num_samples index pairs i.i.d. from the product of the marginals,
/// collapses duplicates (keeping the first draw), and observes
/// M* + sigma (xi / ||xi||) ||M*_Omega||_F on the retained pairs.
McInstance gen_mc(Index n1, Index n2, Index r_star, Index num_samples, double sigma, std::uint64_t seed,
                  Index r = 10, double lambda = 1.0, double mu = 1e-10);

void validate(const McInstance& inst);

struct McEval {
  double H = 0.0;
  MatrixX<double> grad_U;
  MatrixX<double> grad_V;
  double L1 = 0.0;  ///< ||V||_2^2
  double L2 = 0.0;  ///< ||U||_2^2
};

/// H = 0.5 ||P_Omega(U V^T - M)||_F^2, its partial gradients R V and R^T U,
/// and the block Lipschitz moduli.
McEval mc_H_and_grads(const MatrixX<double>& U, const MatrixX<double>& V, const McInstance& inst);

/// Largest squared singular value, from the r x r Gram matrix.
double squared_spectral_norm(const MatrixX<double>& X);

/// Psi(U, V) = H(U, V) + f(U) + g(V), f = g = (mu/2)||.||_F^2 + lambda ||.||_{2,0}.
class McProblem final : public BlockProblem<double> {
 public:
  explicit McProblem(McInstance inst);

  double f_value(const Block& x) const override { return ridge_l20_penalty(x, spec_); }
  double g_value(const Block& y) const override { return ridge_l20_penalty(y, spec_); }
  Block prox_f(const Block& v, double tau) const override { return prox_ridge_l20_columns(v, tau, spec_); }
  Block prox_g(const Block& v, double tau) const override { return prox_ridge_l20_columns(v, tau, spec_); }

  double coupling_value(const Block& x, const Block& y) const override;
  Block coupling_grad_x(const Block& x, const Block& y) const override;
  Block coupling_grad_y(const Block& x, const Block& y) const override;
  double lipschitz_x(const Block& y) const override { return squared_spectral_norm(y); }
  double lipschitz_y(const Block& x) const override { return squared_spectral_norm(x); }
  /// M = sqrt(Ry^4 + (2 Rx Ry + ||M_Omega||_F)^2), Lbar2 = Rx^2.
  CouplingBounds<double> coupling_bounds(double radius_x, double radius_y) const override;

  const McInstance& instance() const { return inst_; }
  const ProxSpec<double>& prox_spec() const { return spec_; }

 private:
  /// Residual U_i . V_j - M_ij on each observed entry.
  VectorX<double> residual(const Block& U, const Block& V) const;

  McInstance inst_;
  ProxSpec<double> spec_;
  double m_obs_norm_;
};

/// U0, V0 with i.i.d. N(0, c^2) entries, c = (||M_obs||^2 / (|Omega| r))^{1/4}, so
/// that U0 V0^T matches the observed entries in average magnitude.
std::pair<MatrixX<double>, MatrixX<double>> mc_initial_point(const McInstance& inst, std::uint64_t seed);

struct FactorRank {
  Index u_columns = 0;
  Index v_columns = 0;
};

FactorRank factor_rank(const MatrixX<double>& U, const MatrixX<double>& V);

}  // namespace nmdesc
