#pragma once

#include "nmdesc/trace.hpp"

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace nmdesc {

/// Sufficient-decrease check Phi(z^{k+1}) + a ||z^{k+1} - z^k||^2 <= max of the
/// previous memory+1 potentials, replayed from the trace with no slack.
struct H1Result {
  bool pass = true;
  std::int64_t first_violation = -1;  ///< k of the offending row
  std::int64_t checked = 0;
};

H1Result verify_H1(const std::vector<TraceRecord>& trace, std::size_t memory, double a);

/// Relative-error check ||w^k|| <= b ||z^k - z^{k-1}|| on every row with a witness.
struct H2Result {
  bool pass = true;
  double max_ratio = 0.0;
  std::int64_t first_violation = -1;
  bool zero_step_violation = false;  ///< nonzero witness at a zero step
  std::int64_t checked = 0;
};

H2Result verify_H2(const std::vector<TraceRecord>& trace, double b);

/// Membership of each step index k (the step z^k -> z^{k+1}) in the K-sets,
/// with Phi* estimated by the final window maximum.
struct KsetReport {
  double a = 0.0;
  double theta = 0.5;
  double omega_star = 0.0;
  bool omega_estimated = true;
  std::vector<std::int64_t> k;
  std::vector<double> gap;   ///< Phi(z^{l(k+1)}) - Phi(z^{k+1})
  std::vector<double> step;  ///< ||z^{k+1} - z^k||
  std::vector<char> k1, k2, k31, k32;
};

/// Uses the ell column of the trace for l(k+1).
KsetReport classify_ksets(const std::vector<TraceRecord>& trace, double a, double theta = 0.5);

/// Copies K-set flags onto the rows that close each step (row k+1 for index k).
void annotate_ksets(std::vector<TraceRecord>& trace, const KsetReport& report);

struct PartialSums {
  std::vector<double> k1;         ///< cumulative sqrt(gap) over K1
  std::vector<double> k2_k31;     ///< cumulative sqrt(gap) over K2 and K31
  std::vector<double> reference;  ///< sum_{j=1}^{k+1} 3000 / sqrt(j^2.1)
};

PartialSums condition_partial_sums(const KsetReport& report);

/// Writes one row per step index with the gap, the flags and the partial sums.
void write_kset_csv(std::ostream& out, const KsetReport& report, const PartialSums& sums);

/// Phi(z^{l(k)}) for every row; nonincreasing for any accepted trace.
std::vector<double> window_max_series(const std::vector<TraceRecord>& trace);

/// Xi_k = ||z^{l(k)} - z^{l(k)-1}||, read from the step column.
std::vector<double> xi_series(const std::vector<TraceRecord>& trace);

enum class RateMode { linear, sublinear };

class RateFitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RateFit {
  RateMode mode = RateMode::linear;
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double rho = 0.0;    ///< linear: exp(slope)
  double theta = 0.0;  ///< sublinear: (s - 1) / (2 s - 1) for slope s
  std::size_t points = 0;
  std::vector<std::string> warnings;
};

/// Least squares on log(gap) against k (linear) or log k (sublinear). The
/// series is cut at its first nonpositive entry (with a warning); fewer than 20
/// usable points or a non-decaying series raise RateFitError.
RateFit fit_rate(const std::vector<double>& k, const std::vector<double>& gaps, RateMode mode);

/// Tail used for rate fitting: the last half of the iterations after the first
/// backtrack-free step. Gaps are F(x^k) - F_final; entries at or below
/// floor * max(1, |F_final|) count as nonpositive.
struct RateTail {
  std::vector<double> k;
  std::vector<double> gaps;
};

RateTail objective_gap_tail(const std::vector<TraceRecord>& trace, double floor = 1e-12);

class EvolutionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// E(t) = min over rows with T(k) <= t of (F_k - F_min) / (F_0 - F_min), clamped
/// to [0, 1]. With use_iterations the row index k plays the role of T(k).
std::vector<double> evolution_curve(const std::vector<TraceRecord>& trace, double f_min,
                                    const std::vector<double>& grid, bool use_iterations = false);

/// Smallest final objective over a set of traces on one instance.
double terminal_minimum(const std::vector<std::vector<TraceRecord>>& traces);

/// Pointwise mean of equally sized curves.
std::vector<double> average_curves(const std::vector<std::vector<double>>& curves);

}  // namespace nmdesc
