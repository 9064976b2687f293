#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <stdexcept>
#include <utility>

namespace nmdesc {

/// The last m+1 potential values, keyed by iteration index.
template <typename Scalar>
class HistoryWindow {
 public:
  struct Entry {
    std::int64_t k;
    Scalar value;
  };

  explicit HistoryWindow(std::size_t memory = 0) : memory_(memory) {}

  std::size_t memory() const { return memory_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::deque<Entry>& entries() const { return entries_; }

  void push(std::int64_t k, Scalar value) {
    if (!entries_.empty() && k <= entries_.back().k)
      throw std::invalid_argument("HistoryWindow: indices must increase");
    entries_.push_back({k, value});
    while (entries_.size() > memory_ + 1) entries_.pop_front();
  }

  /// Maximum stored value and the largest index attaining it.
  std::pair<Scalar, std::int64_t> max() const {
    if (entries_.empty()) throw std::logic_error("HistoryWindow: empty");
    Scalar best = entries_.front().value;
    std::int64_t ell = entries_.front().k;
    for (const Entry& e : entries_) {
      if (e.value >= best) {
        best = e.value;
        ell = e.k;
      }
    }
    return {best, ell};
  }

 private:
  std::size_t memory_;
  std::deque<Entry> entries_;
};

template <typename Scalar>
std::pair<Scalar, std::int64_t> window_max(const HistoryWindow<Scalar>& w) {
  return w.max();
}

/// Nonmonotone sufficient-decrease test:
/// candidate <= max(window) - (alpha/2) * step_sq, non-strict.
template <typename Scalar>
bool accept(Scalar candidate, const HistoryWindow<Scalar>& window, Scalar alpha, Scalar step_sq) {
  return candidate <= window.max().first - alpha / Scalar(2) * step_sq;
}

namespace detail {

/// True when a failed acceptance margin is at the level of floating-point
/// noise in the potential. Trials rejected only by such a margin cannot be
/// told apart from accepted ones in this precision.
template <typename Scalar>
bool within_roundoff(Scalar excess, Scalar reference) {
  const Scalar scale = std::max(Scalar(1), std::abs(reference));
  return excess <= Scalar(64) * std::numeric_limits<Scalar>::epsilon() * scale;
}

}  // namespace detail

template <typename Scalar>
struct BacktrackParams {
  Scalar beta;
  Scalar tau;
};

/// beta = beta0 eta1^l, tau = max(tau0 eta2^l, tau_min).
template <typename Scalar>
BacktrackParams<Scalar> backtrack_params(int l, Scalar beta0, Scalar tau0, Scalar eta1,
                                         Scalar eta2, Scalar tau_min) {
  if (!(eta1 > 0 && eta1 < 1 && eta2 > 0 && eta2 < 1))
    throw std::invalid_argument("backtrack_params: eta1, eta2 must lie in (0,1)");
  if (!(tau_min > 0)) throw std::invalid_argument("backtrack_params: tau_min must be positive");
  const Scalar beta = beta0 * std::pow(eta1, l);
  const Scalar tau = std::max(tau0 * std::pow(eta2, l), tau_min);
  return {beta, tau};
}

}  // namespace nmdesc
