#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

namespace nmdesc {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Raised when an iterative estimate does not settle; carries the last value.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double best_estimate, int iterations)
      : std::runtime_error(what), best_estimate_(best_estimate), iterations_(iterations) {}

  double best_estimate() const { return best_estimate_; }
  int iterations() const { return iterations_; }

 private:
  double best_estimate_;
  int iterations_;
};

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& a) {
  return a.allFinite();
}

/// Largest singular value by power iteration on A^T A.
///
/// The start vector is the normalized all-ones vector, so the estimate does not
/// depend on any random state. Iteration stops once the relative change of the
/// Rayleigh-quotient estimate falls below tol / 10.
template <typename Derived>
typename Derived::Scalar spectral_norm(const Eigen::MatrixBase<Derived>& a,
                                       typename Derived::Scalar tol = 1e-6,
                                       int max_iter = 5000) {
  using Scalar = typename Derived::Scalar;
  if (!(tol > Scalar(0))) throw std::invalid_argument("spectral_norm: tol must be positive");
  if (a.size() == 0) throw std::invalid_argument("spectral_norm: empty matrix");

  const Index n = a.cols();
  VectorX<Scalar> v = VectorX<Scalar>::Ones(n) / std::sqrt(Scalar(n));
  VectorX<Scalar> u = a * v;
  if (u.squaredNorm() == Scalar(0)) {
    // all-ones is in the null space; fall back to a fixed ramp
    v = VectorX<Scalar>::LinSpaced(n, Scalar(1), Scalar(n));
    v.normalize();
    u = a * v;
    if (u.squaredNorm() == Scalar(0)) {
      if (a.squaredNorm() == Scalar(0)) throw std::invalid_argument("spectral_norm: zero matrix");
      // pick the largest column as start
      Index col = 0;
      a.colwise().squaredNorm().maxCoeff(&col);
      v.setZero();
      v(col) = Scalar(1);
      u = a * v;
    }
  }

  Scalar sigma = u.norm();
  for (int it = 1; it <= max_iter; ++it) {
    VectorX<Scalar> w = a.transpose() * u;
    const Scalar wn = w.norm();
    if (wn == Scalar(0)) return sigma;
    v = w / wn;
    u = a * v;
    const Scalar next = u.norm();
    const Scalar change = std::abs(next - sigma);
    sigma = next;
    if (change <= Scalar(0.1) * tol * sigma) return sigma;
  }
  throw ConvergenceError("spectral_norm: power iteration did not converge",
                         static_cast<double>(sigma), max_iter);
}

/// Seeded random stream.
///
/// Uniforms take the top 53 bits of a mt19937_64 draw; normals use the
/// Box-Muller transform and hand out both variates of each pair in order.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer on [0, n), rejection-sampled so there is no modulo bias.
  std::uint64_t uniform_index(std::uint64_t n);

  double normal();

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// Matrix of i.i.d. standard normal draws, filled row by row.
template <typename Scalar = double>
MatrixX<Scalar> gaussian_fill(RngStream& rng, Index rows, Index cols) {
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("gaussian_fill: shape must be positive");
  MatrixX<Scalar> out(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) out(i, j) = static_cast<Scalar>(rng.normal());
  return out;
}

}  // namespace nmdesc
