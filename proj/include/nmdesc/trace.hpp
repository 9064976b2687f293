#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace nmdesc {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One accepted iteration. Row k describes z^k: its potential, the step
/// ||z^k - z^{k-1}||, the witness norm ||w^k|| and the parameters of the
/// line search that produced it. Row 0 is the starting point.
struct TraceRecord {
  std::int64_t k = 0;
  double time_s = 0.0;
  double objective = kNaN;
  double potential = kNaN;
  double step_norm = kNaN;
  double witness_norm = kNaN;
  double beta = kNaN;
  double tau1 = kNaN;
  double tau2 = kNaN;
  int backtracks = 0;
  std::int64_t ell = 0;
  // K-set flags for the step that produced this row (k-1 in the set).
  bool in_k1 = false;
  bool in_k2 = false;
  bool in_k31 = false;

  // Not written to CSV; used for line-search diagnostics.
  double beta0 = kNaN;
  double tau1_0 = kNaN;
  double tau2_0 = kNaN;
  double lipschitz_x = kNaN;      ///< L_f for PG, L1(y^k) for PALM
  double lipschitz_y_max = kNaN;  ///< max L2 over trial x^{k+1} (PALM)
  double x_norm = kNaN;
  double y_norm = kNaN;
  bool restarted = false;
};

using TraceSink = std::function<void(const TraceRecord&)>;

/// stagnation: every backtracking trial was rejected by a margin within
/// floating-point round-off of the potential, so no further progress is
/// measurable.
enum class StopReason { tolerance, max_iters, time_budget, backtrack_limit, stagnation };

std::string to_string(StopReason r);

class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline constexpr const char* kTraceCsvVersion = "# nmdesc-trace v1";

/// Columns present in a parsed trace; optional ones may be missing.
struct TraceColumns {
  bool witness = true;
  bool ksets = true;
};

/// Writes the versioned CSV. With replay set, time_s is written as 0.
void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace, bool replay = false);

/// Parses a trace CSV. Required columns: k, objective, potential, step_norm, ell.
std::vector<TraceRecord> read_trace_csv(std::istream& in, TraceColumns* present = nullptr);

}  // namespace nmdesc
