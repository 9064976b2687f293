#pragma once

#include "nmdesc/linalg.hpp"

namespace nmdesc {

/// F = f + g with f smooth (gradient L_f-Lipschitz) and g prox-friendly.
template <typename Scalar>
class CompositeProblem {
 public:
  using Vector = VectorX<Scalar>;

  virtual ~CompositeProblem() = default;

  virtual Index dimension() const = 0;
  virtual Scalar smooth_value(const Vector& x) const = 0;
  /// Returns f(x) and writes the gradient into grad.
  virtual Scalar smooth_value_grad(const Vector& x, Vector& grad) const = 0;
  virtual Scalar nonsmooth_value(const Vector& x) const = 0;
  virtual Vector prox(const Vector& v, Scalar tau) const = 0;
  virtual Scalar lipschitz() const = 0;

  /// Step used for the very first trial step; 1/L_f unless a problem knows better.
  virtual Scalar initial_step() const { return Scalar(1) / lipschitz(); }

  Scalar objective(const Vector& x) const { return smooth_value(x) + nonsmooth_value(x); }
};

/// Constants bounding the coupling term on norm balls of the given radii.
template <typename Scalar>
struct CouplingBounds {
  Scalar joint_lipschitz_x;  ///< Lipschitz modulus of grad_x H in (x, y) jointly
  Scalar max_lipschitz_y;    ///< sup of L2(x) over the x-ball
};

/// Psi(x, y) = f(x) + g(y) + H(x, y), with H smooth and f, g prox-friendly.
/// Blocks are dense matrices; a vector block is an n x 1 matrix.
template <typename Scalar>
class BlockProblem {
 public:
  using Block = MatrixX<Scalar>;

  virtual ~BlockProblem() = default;

  virtual Scalar f_value(const Block& x) const = 0;
  virtual Scalar g_value(const Block& y) const = 0;
  virtual Block prox_f(const Block& v, Scalar tau) const = 0;
  virtual Block prox_g(const Block& v, Scalar tau) const = 0;

  virtual Scalar coupling_value(const Block& x, const Block& y) const = 0;
  virtual Block coupling_grad_x(const Block& x, const Block& y) const = 0;
  virtual Block coupling_grad_y(const Block& x, const Block& y) const = 0;
  /// L1(y): Lipschitz modulus of grad_x H(., y).
  virtual Scalar lipschitz_x(const Block& y) const = 0;
  /// L2(x): Lipschitz modulus of grad_y H(x, .).
  virtual Scalar lipschitz_y(const Block& x) const = 0;
  virtual CouplingBounds<Scalar> coupling_bounds(Scalar radius_x, Scalar radius_y) const = 0;

  Scalar objective(const Block& x, const Block& y) const {
    return f_value(x) + g_value(y) + coupling_value(x, y);
  }
};

}  // namespace nmdesc
