#pragma once

#include "nmdesc/config.hpp"
#include "nmdesc/diagnostics.hpp"
#include "nmdesc/instance_io.hpp"
#include "nmdesc/palm.hpp"
#include "nmdesc/pg.hpp"
#include "nmdesc/svg.hpp"
#include "nmdesc/toy_problems.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace nmdesc {

/// splitmix64 of base and stream, for independent per-trial seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// A problem instance with its starting point, ready for any solver of the
/// matching family.
struct Workload {
  std::string kind;  ///< logreg | mc | quad
  std::shared_ptr<const LogRegProblem> logreg;
  std::shared_ptr<const McProblem> mc;
  std::shared_ptr<const QuadraticComposite<double>> quad;
  VectorX<double> x0;  ///< composite problems
  MatrixX<double> U0;  ///< block problems
  MatrixX<double> V0;

  const CompositeProblem<double>* composite() const;
  const BlockProblem<double>* block() const;
};

/// Generates (or loads) the instance for a problem spec; the seed drives both
/// the generator and the starting point.
Workload make_workload(const ProblemSpec& spec, std::uint64_t seed);
Workload make_workload(const Instance& instance, const ProblemSpec& spec, std::uint64_t seed);
Instance generate_instance(const ProblemSpec& spec, std::uint64_t seed);

/// Everything a single solver run produces, plus the constants the
/// diagnostics need.
struct SolverOutcome {
  std::string name;
  std::string label;
  std::vector<TraceRecord> trace;
  StopReason stop = StopReason::max_iters;
  std::string error;
  std::vector<std::string> warnings;
  double final_objective = 0.0;
  std::int64_t iterations = 0;
  double wall_time = 0.0;
  std::int64_t sparsity = -1;  ///< logreg: ||x~||_0
  FactorRank rank{-1, -1};     ///< mc: nonzero factor columns

  bool line_search = false;
  std::size_t memory = 0;
  double h1_a = kNaN;  ///< NaN when the method makes no H1 claim
  double h2_b = kNaN;  ///< NaN when no witness constant is available
  double lipschitz = kNaN;
  std::optional<PgConfig<double>> pg;
  std::optional<PalmConfig<double>> palm;
};

PgConfig<double> pg_config_for(const SolverSpec& spec, const RunLimits& limits);
PalmConfig<double> palm_config_for(const SolverSpec& spec, const RunLimits& limits);

/// Throws std::invalid_argument when the spec does not fit the workload or
/// its parameters are invalid. Solver failures are reported in the outcome.
SolverOutcome run_solver(const Workload& work, const SolverSpec& spec, const RunLimits& limits,
                         const TraceSink& sink = {});

/// Per-iteration comparison of the backtrack count with the bound implied by
/// the step-size lemmas.
struct BacktrackCheck {
  bool applicable = false;
  bool pass = true;
  std::int64_t violations = 0;
  std::int64_t uncertified = 0;  ///< rows where no finite bound exists
  std::int64_t first_violation = -1;
  int max_backtracks = 0;
  std::int64_t min_slack = 0;  ///< min over rows of bound - backtracks
};

BacktrackCheck check_backtrack_bound(const SolverOutcome& outcome);

/// Linear and sublinear fits of F(x^k) - F_final on the trace tail.
struct RateReport {
  std::optional<RateFit> linear;
  std::optional<RateFit> sublinear;
  std::vector<std::string> errors;
};

RateReport rate_report(const std::vector<TraceRecord>& trace);

struct DiagParams {
  std::size_t memory = 5;
  double alpha = 1e-5;  ///< a = alpha / 2
  double theta = 0.5;
  std::optional<double> b;  ///< H2 constant; skipped when absent
};

struct DiagReport {
  H1Result h1;
  std::optional<H2Result> h2;
  KsetReport ksets;
  PartialSums sums;
  std::vector<std::string> warnings;
};

DiagReport run_diag(std::vector<TraceRecord>& trace, const TraceColumns& columns, const DiagParams& params);

/// Figure-2 style plot: K1 partial sums against the reference series.
PlotPanel partial_sum_panel(const PartialSums& sums, const std::string& title);

struct BenchSolverSummary {
  std::string label;
  std::vector<double> mean_curve;     ///< E on the grid, averaged over successful trials
  std::vector<double> terminal;       ///< terminal E per trial (NaN when the trial failed)
  std::vector<double> final_objective;
  std::vector<std::int64_t> sparsity;  ///< per trial, -1 when not applicable
  std::vector<std::int64_t> rank;      ///< per trial, u + v columns
  std::vector<std::string> failures;
  bool excluded = false;
};

struct BenchPanel {
  double lambda = 0.0;
  std::vector<double> grid;
  std::vector<BenchSolverSummary> solvers;
};

struct BenchResult {
  BenchClock clock = BenchClock::time;
  std::vector<BenchPanel> panels;
  std::vector<std::string> notes;
};

/// Runs every solver on every trial instance, jobs trials at a time. Results
/// are assembled in trial order, so output does not depend on scheduling.
BenchResult run_bench(const BenchConfig& config, int jobs = 1);

void write_bench_csv(std::ostream& out, const BenchResult& result);
/// One row per (lambda, trial, solver): terminal E, final objective, sparsity, rank.
void write_bench_summary_csv(std::ostream& out, const BenchResult& result);
std::vector<PlotPanel> bench_panels(const BenchResult& result);

}  // namespace nmdesc
