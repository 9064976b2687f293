#pragma once

#include "nmdesc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace nmdesc {

enum class ProxKind { l0_vector, ridge_l20_columns };

/// Parameters of a hard-thresholding regularizer.
///
/// For l0_vector the penalty is lambda * #{i not in skip : x_i != 0}. For
/// ridge_l20_columns it is (mu/2)||X||_F^2 + lambda * #{nonzero columns}.
/// Coordinates listed in skip are never penalized (used for an intercept).
template <typename Scalar>
struct ProxSpec {
  ProxKind kind = ProxKind::l0_vector;
  Scalar lambda = Scalar(0);
  Scalar mu = Scalar(0);
  std::vector<Index> skip;

  void validate(Index dim) const {
    if (!std::isfinite(lambda) || lambda < Scalar(0))
      throw std::invalid_argument("ProxSpec: lambda must be finite and nonnegative");
    if (!std::isfinite(mu) || mu < Scalar(0))
      throw std::invalid_argument("ProxSpec: mu must be finite and nonnegative");
    for (Index i : skip)
      if (i < 0 || i >= dim) throw std::invalid_argument("ProxSpec: skip index out of range");
  }

  bool skipped(Index i) const { return std::find(skip.begin(), skip.end(), i) != skip.end(); }
};

/// Hard thresholding: keeps v_i when v_i^2 >= 2 tau lambda (ties keep v_i).
template <typename Derived>
VectorX<typename Derived::Scalar> prox_l0(const Eigen::MatrixBase<Derived>& v,
                                          typename Derived::Scalar tau,
                                          const ProxSpec<typename Derived::Scalar>& spec) {
  using Scalar = typename Derived::Scalar;
  if (!(tau > Scalar(0))) throw std::invalid_argument("prox_l0: tau must be positive");
  const Scalar threshold = Scalar(2) * tau * spec.lambda;
  VectorX<Scalar> out = v;
  for (Index i = 0; i < out.size(); ++i) {
    if (out(i) * out(i) < threshold && !spec.skipped(i)) out(i) = Scalar(0);
  }
  return out;
}

/// Column-wise prox of (mu/2)||.||^2 + lambda * 1[col != 0].
///
/// Each column c becomes c / (1 + tau mu) when ||c||^2 >= 2 lambda tau (1 + tau mu)
/// and zero otherwise. Derivation: the nonzero branch attains
/// mu ||c||^2 / (2(1 + tau mu)) + lambda, the zero branch ||c||^2 / (2 tau).
template <typename Derived>
MatrixX<typename Derived::Scalar> prox_ridge_l20_columns(
    const Eigen::MatrixBase<Derived>& v, typename Derived::Scalar tau,
    const ProxSpec<typename Derived::Scalar>& spec) {
  using Scalar = typename Derived::Scalar;
  if (!(tau > Scalar(0))) throw std::invalid_argument("prox_ridge_l20_columns: tau must be positive");
  const Scalar shrink = Scalar(1) + tau * spec.mu;
  const Scalar threshold = Scalar(2) * spec.lambda * tau * shrink;
  MatrixX<Scalar> out(v.rows(), v.cols());
  for (Index j = 0; j < v.cols(); ++j) {
    if (spec.skipped(j) || v.col(j).squaredNorm() >= threshold)
      out.col(j) = v.col(j) / shrink;
    else
      out.col(j).setZero();
  }
  return out;
}

template <typename Derived>
typename Derived::Scalar l0_penalty(const Eigen::MatrixBase<Derived>& x,
                                    const ProxSpec<typename Derived::Scalar>& spec) {
  Index count = 0;
  for (Index i = 0; i < x.size(); ++i)
    if (x(i) != 0 && !spec.skipped(i)) ++count;
  return spec.lambda * static_cast<typename Derived::Scalar>(count);
}

template <typename Derived>
Index nonzero_columns(const Eigen::MatrixBase<Derived>& x) {
  Index count = 0;
  for (Index j = 0; j < x.cols(); ++j)
    if ((x.col(j).array() != 0).any()) ++count;
  return count;
}

template <typename Derived>
typename Derived::Scalar ridge_l20_penalty(const Eigen::MatrixBase<Derived>& x,
                                           const ProxSpec<typename Derived::Scalar>& spec) {
  using Scalar = typename Derived::Scalar;
  Index count = 0;
  for (Index j = 0; j < x.cols(); ++j)
    if ((x.col(j).array() != 0).any() && !spec.skipped(j)) ++count;
  return spec.mu / Scalar(2) * x.squaredNorm() + spec.lambda * static_cast<Scalar>(count);
}

/// Dispatches on spec.kind; vectors are treated as single-column matrices for
/// the column variant.
template <typename Derived>
MatrixX<typename Derived::Scalar> apply_prox(const Eigen::MatrixBase<Derived>& v,
                                             typename Derived::Scalar tau,
                                             const ProxSpec<typename Derived::Scalar>& spec) {
  if (spec.kind == ProxKind::l0_vector) {
    using Scalar = typename Derived::Scalar;
    MatrixX<Scalar> out = v;
    Eigen::Map<VectorX<Scalar>> flat(out.data(), out.size());
    flat = prox_l0(flat, tau, spec);
    return out;
  }
  return prox_ridge_l20_columns(v, tau, spec);
}

template <typename Derived>
typename Derived::Scalar penalty(const Eigen::MatrixBase<Derived>& x,
                                 const ProxSpec<typename Derived::Scalar>& spec) {
  if (spec.kind == ProxKind::l0_vector) {
    using Scalar = typename Derived::Scalar;
    MatrixX<Scalar> tmp = x;
    const Eigen::Map<const VectorX<Scalar>> flat(tmp.data(), tmp.size());
    return l0_penalty(flat, spec);
  }
  return ridge_l20_penalty(x, spec);
}

}  // namespace nmdesc
