#pragma once

#include "nmdesc/linalg.hpp"
#include "nmdesc/problem.hpp"
#include "nmdesc/prox.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <utility>

namespace nmdesc {

/// f(x) = 0.5 x^T Q x - c^T x with Q symmetric positive semidefinite, g from a ProxSpec.
template <typename Scalar>
class QuadraticComposite final : public CompositeProblem<Scalar> {
 public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;

  QuadraticComposite(Matrix q, Vector c, ProxSpec<Scalar> spec = {})
      : q_(std::move(q)), c_(std::move(c)), spec_(std::move(spec)) {
    if (q_.rows() != q_.cols() || q_.rows() != c_.size())
      throw std::invalid_argument("QuadraticComposite: shape mismatch");
    spec_.validate(q_.rows());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(q_, Eigen::EigenvaluesOnly);
    lipschitz_ = std::max(eig.eigenvalues().maxCoeff(), Scalar(0));
  }

  Index dimension() const override { return q_.rows(); }
  Scalar smooth_value(const Vector& x) const override { return Scalar(0.5) * x.dot(q_ * x) - c_.dot(x); }
  Scalar smooth_value_grad(const Vector& x, Vector& grad) const override {
    grad = q_ * x - c_;
    return Scalar(0.5) * x.dot(grad - c_);
  }
  Scalar nonsmooth_value(const Vector& x) const override { return penalty(x, spec_); }
  Vector prox(const Vector& v, Scalar tau) const override {
    Matrix out = apply_prox(v, tau, spec_);
    return Eigen::Map<const Vector>(out.data(), out.size());
  }
  Scalar lipschitz() const override { return lipschitz_; }

  const Matrix& q() const { return q_; }
  const Vector& c() const { return c_; }

 private:
  Matrix q_;
  Vector c_;
  ProxSpec<Scalar> spec_;
  Scalar lipschitz_;
};

/// Random well-conditioned quadratic: Q = G^T G / dim + shift I.
template <typename Scalar = double>
QuadraticComposite<Scalar> random_quadratic(RngStream& rng, Index dim, Scalar shift,
                                            ProxSpec<Scalar> spec = {}) {
  const MatrixX<Scalar> g = gaussian_fill<Scalar>(rng, dim, dim);
  MatrixX<Scalar> q = g.transpose() * g / static_cast<Scalar>(dim);
  q.diagonal().array() += shift;
  const VectorX<Scalar> c = gaussian_fill<Scalar>(rng, dim, 1);
  return QuadraticComposite<Scalar>(std::move(q), c, std::move(spec));
}

/// H(x, y) = (a/2)||x||^2 + (b/2)||y||^2 + <x, B y> over column blocks, with f
/// and g given by ProxSpecs. Covers the decoupled (B = 0) and bilinear cases.
template <typename Scalar>
class QuadraticBlocks final : public BlockProblem<Scalar> {
 public:
  using Block = MatrixX<Scalar>;

  QuadraticBlocks(Scalar a, Scalar b, Block coupling, ProxSpec<Scalar> f_spec = {}, ProxSpec<Scalar> g_spec = {})
      : a_(a), b_(b), coupling_(std::move(coupling)), f_(std::move(f_spec)), g_(std::move(g_spec)) {
    if (!(a_ >= 0 && b_ >= 0)) throw std::invalid_argument("QuadraticBlocks: a, b must be nonnegative");
    coupling_norm_ = coupling_.size() == 0 || coupling_.isZero(0) ? Scalar(0) : spectral_norm(coupling_);
  }

  Scalar f_value(const Block& x) const override { return penalty(x, f_); }
  Scalar g_value(const Block& y) const override { return penalty(y, g_); }
  Block prox_f(const Block& v, Scalar tau) const override { return apply_prox(v, tau, f_); }
  Block prox_g(const Block& v, Scalar tau) const override { return apply_prox(v, tau, g_); }

  Scalar coupling_value(const Block& x, const Block& y) const override {
    return a_ / 2 * x.squaredNorm() + b_ / 2 * y.squaredNorm() + (x.transpose() * coupling_ * y).trace();
  }
  Block coupling_grad_x(const Block& x, const Block& y) const override { return a_ * x + coupling_ * y; }
  Block coupling_grad_y(const Block& x, const Block& y) const override {
    return b_ * y + coupling_.transpose() * x;
  }
  Scalar lipschitz_x(const Block&) const override { return a_; }
  Scalar lipschitz_y(const Block&) const override { return b_; }
  CouplingBounds<Scalar> coupling_bounds(Scalar, Scalar) const override {
    return {std::sqrt(a_ * a_ + coupling_norm_ * coupling_norm_), b_};
  }

 private:
  Scalar a_, b_;
  Block coupling_;
  Scalar coupling_norm_;
  ProxSpec<Scalar> f_, g_;
};

}  // namespace nmdesc
