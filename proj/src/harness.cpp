#include "nmdesc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <limits>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

namespace nmdesc {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

const CompositeProblem<double>* Workload::composite() const {
  if (logreg) return logreg.get();
  if (quad) return quad.get();
  return nullptr;
}

const BlockProblem<double>* Workload::block() const { return mc.get(); }

Instance generate_instance(const ProblemSpec& spec, std::uint64_t seed) {
  if (!spec.instance_path.empty()) return load_instance(spec.instance_path);
  if (spec.kind == "logreg")
    return gen_logreg(spec.n, spec.p, spec.s, seed, spec.lambda.value_or(1.0), spec.mu.value_or(1e-10));
  if (spec.kind == "mc")
    return gen_mc(spec.n1, spec.n2, spec.rstar, spec.samples, spec.sigma, seed, spec.r, spec.lambda.value_or(1.0),
                  spec.mu.value_or(1e-10));
  throw std::invalid_argument("problem kind '" + spec.kind + "' has no instance file format");
}

Workload make_workload(const Instance& instance, const ProblemSpec& spec, std::uint64_t seed) {
  Workload w;
  if (const auto* lr = std::get_if<LogRegInstance>(&instance)) {
    LogRegInstance inst = *lr;
    if (spec.lambda) inst.lambda = *spec.lambda;
    if (spec.mu) inst.mu = *spec.mu;
    const auto rule = spec.lipschitz == "paper" ? LogRegLipschitz::paper : LogRegLipschitz::conservative;
    w.kind = "logreg";
    w.logreg = std::make_shared<const LogRegProblem>(std::move(inst), rule);
    w.x0 = VectorX<double>::Zero(w.logreg->dimension());
    return w;
  }
  McInstance inst = std::get<McInstance>(instance);
  if (spec.lambda) inst.lambda = *spec.lambda;
  if (spec.mu) inst.mu = *spec.mu;
  w.kind = "mc";
  auto start = mc_initial_point(inst, derive_seed(seed, 1));
  w.U0 = std::move(start.first);
  w.V0 = std::move(start.second);
  w.mc = std::make_shared<const McProblem>(std::move(inst));
  return w;
}

Workload make_workload(const ProblemSpec& spec, std::uint64_t seed) {
  if (spec.kind == "quad") {
    if (spec.dim < 1) throw std::invalid_argument("quad problem needs dim >= 1");
    RngStream rng(seed);
    ProxSpec<double> prox;
    prox.lambda = spec.lambda.value_or(0.0);
    Workload w;
    w.kind = "quad";
    w.quad = std::make_shared<const QuadraticComposite<double>>(random_quadratic<double>(rng, spec.dim, 1.0, prox));
    w.x0 = gaussian_fill(rng, spec.dim, 1);
    return w;
  }
  return make_workload(generate_instance(spec, seed), spec, seed);
}

namespace {

using Params = std::map<std::string, std::string>;

double real_param(const Params& p, const std::string& key, double fallback) {
  const auto it = p.find(key);
  return it == p.end() ? fallback : parse_real(it->second, "solver." + key);
}

std::int64_t int_param(const Params& p, const std::string& key, std::int64_t fallback) {
  const auto it = p.find(key);
  return it == p.end() ? fallback : parse_integer(it->second, "solver." + key);
}

void require_keys(const SolverSpec& spec, const std::set<std::string>& allowed) {
  for (const auto& [k, v] : spec.params)
    if (!allowed.count(k)) throw std::invalid_argument("solver " + spec.name + ": unknown parameter '" + k + "'");
}

BetaRule beta_rule_param(const Params& p, BetaRule fallback) {
  const auto it = p.find("beta_rule");
  if (it == p.end()) return fallback;
  if (it->second == "nesterov") return BetaRule::nesterov;
  if (it->second == "constant") return BetaRule::constant;
  throw std::invalid_argument("solver.beta_rule must be nesterov or constant");
}

bool bool_param(const Params& p, const std::string& key, bool fallback) {
  const auto it = p.find(key);
  return it == p.end() ? fallback : parse_bool(it->second, "solver." + key);
}

std::size_t memory_param(const Params& p, std::size_t fallback) {
  const std::int64_t m = int_param(p, "m", static_cast<std::int64_t>(fallback));
  if (m < 0) throw std::invalid_argument("solver.m must be nonnegative");
  return static_cast<std::size_t>(m);
}

}  // namespace

PgConfig<double> pg_config_for(const SolverSpec& spec, const RunLimits& limits) {
  require_keys(spec, {"m", "delta", "alpha", "beta_max", "eta1", "eta2", "tau_min", "tau_max", "tau_init",
                      "max_backtracks", "bb", "beta_rule"});
  PgVariant variant;
  if (spec.name == "pgenls")
    variant = PgVariant::pgenls;
  else if (spec.name == "pgnls")
    variant = PgVariant::pgnls;
  else if (spec.name == "pgels")
    variant = PgVariant::pgels;
  else if (spec.name == "pgls")
    variant = PgVariant::pgls;
  else
    throw std::invalid_argument("'" + spec.name + "' is not a line-search PG variant");
  PgConfig<double> c = with_variant(PgConfig<double>{}, variant);
  const Params& p = spec.params;
  c.memory = memory_param(p, c.memory);
  c.delta = real_param(p, "delta", c.delta);
  c.alpha = real_param(p, "alpha", c.alpha);
  c.beta_max = real_param(p, "beta_max", c.beta_max);
  c.eta1 = real_param(p, "eta1", c.eta1);
  c.eta2 = real_param(p, "eta2", c.eta2);
  c.tau_min = real_param(p, "tau_min", c.tau_min);
  c.tau_max = real_param(p, "tau_max", c.tau_max);
  c.tau_init = real_param(p, "tau_init", c.tau_init);
  c.max_backtracks = static_cast<int>(int_param(p, "max_backtracks", c.max_backtracks));
  c.bb_steps = bool_param(p, "bb", c.bb_steps);
  c.beta_rule = beta_rule_param(p, c.beta_rule);
  c.stop_tol = limits.stop_tol;
  c.max_iters = limits.max_iters;
  c.time_budget = limits.time_budget;
  return c;
}

PalmConfig<double> palm_config_for(const SolverSpec& spec, const RunLimits& limits) {
  require_keys(spec, {"m", "delta", "alpha", "beta_max", "eta", "eta1", "eta2", "tau_lo", "tau_hi", "tau1_init",
                      "tau2_init", "max_backtracks", "bb", "beta_rule"});
  PalmVariant variant;
  if (spec.name == "palmenls")
    variant = PalmVariant::palmenls;
  else if (spec.name == "palmnls")
    variant = PalmVariant::palmnls;
  else if (spec.name == "palmels")
    variant = PalmVariant::palmels;
  else if (spec.name == "palmls")
    variant = PalmVariant::palmls;
  else
    throw std::invalid_argument("'" + spec.name + "' is not a line-search PALM variant");
  PalmConfig<double> c = with_variant(PalmConfig<double>{}, variant);
  const Params& p = spec.params;
  c.memory = memory_param(p, c.memory);
  c.delta = real_param(p, "delta", c.delta);
  c.alpha = real_param(p, "alpha", c.alpha);
  c.beta_max = real_param(p, "beta_max", c.beta_max);
  c.eta = real_param(p, "eta", c.eta);
  c.eta1 = real_param(p, "eta1", c.eta1);
  c.eta2 = real_param(p, "eta2", c.eta2);
  c.tau_lo = real_param(p, "tau_lo", c.tau_lo);
  c.tau_hi = real_param(p, "tau_hi", c.tau_hi);
  c.tau1_init = real_param(p, "tau1_init", c.tau1_init);
  c.tau2_init = real_param(p, "tau2_init", c.tau2_init);
  c.max_backtracks = static_cast<int>(int_param(p, "max_backtracks", c.max_backtracks));
  c.bb_steps = bool_param(p, "bb", c.bb_steps);
  c.beta_rule = beta_rule_param(p, c.beta_rule);
  c.stop_tol = limits.stop_tol;
  c.max_iters = limits.max_iters;
  c.time_budget = limits.time_budget;
  return c;
}

namespace {

void finish_outcome(SolverOutcome& out, const Workload& work, const VectorX<double>* x, const MatrixX<double>* U,
                    const MatrixX<double>* V) {
  if (!out.trace.empty()) {
    out.final_objective = out.trace.back().objective;
    out.iterations = out.trace.back().k;
    out.wall_time = out.trace.back().time_s;
  }
  if (work.kind == "logreg" && x) out.sparsity = support_size(*x);
  if (work.kind == "quad" && x) out.sparsity = static_cast<std::int64_t>((x->array() != 0.0).count());
  if (work.kind == "mc" && U && V) out.rank = factor_rank(*U, *V);
}

template <typename Result>
void copy_common(SolverOutcome& out, Result& res) {
  out.trace = std::move(res.trace);
  out.stop = res.stop;
  out.error = res.error;
}

}  // namespace

SolverOutcome run_solver(const Workload& work, const SolverSpec& spec, const RunLimits& limits,
                         const TraceSink& sink) {
  SolverOutcome out;
  out.name = spec.name;
  out.label = spec.label();
  if (is_pg_family(spec.name)) {
    const CompositeProblem<double>* problem = work.composite();
    if (!problem) throw std::invalid_argument("solver " + spec.name + " needs a composite (logreg or quad) problem");
    if (spec.name == "fista" || spec.name == "refista") {
      require_keys(spec, {"restart_period"});
      FistaConfig fc;
      fc.restart = spec.name == "refista";
      fc.restart_period = int_param(spec.params, "restart_period", fc.restart_period);
      if (fc.restart_period < 1) throw std::invalid_argument("solver.restart_period must be positive");
      fc.stop_tol = limits.stop_tol;
      fc.max_iters = limits.max_iters;
      fc.time_budget = limits.time_budget;
      auto res = run_fista(*problem, work.x0, fc, sink);
      out.lipschitz = res.lipschitz;
      copy_common(out, res);
      finish_outcome(out, work, &res.x, nullptr, nullptr);
      return out;
    }
    auto res = run_pg(*problem, work.x0, pg_config_for(spec, limits), sink);
    const PgConfig<double>& c = res.config;
    out.pg = c;
    out.lipschitz = res.lipschitz;
    out.line_search = true;
    out.memory = c.memory;
    out.h1_a = c.alpha / 2.0;
    out.h2_b = pg_witness_constant(res.lipschitz, c.tau_min, c.beta_max, c.delta);
    copy_common(out, res);
    finish_outcome(out, work, &res.x, nullptr, nullptr);
    return out;
  }

  const BlockProblem<double>* problem = work.block();
  if (!problem) throw std::invalid_argument("solver " + spec.name + " needs a block (mc) problem");
  if (spec.name == "palm" || spec.name == "palme") {
    require_keys(spec, {"tau_hi"});
    PalmBaselineConfig<double> bc;
    bc.beta_max = spec.name == "palme" ? 1.0 : 0.0;
    bc.tau_hi = real_param(spec.params, "tau_hi", bc.tau_hi);
    bc.stop_tol = limits.stop_tol;
    bc.max_iters = limits.max_iters;
    bc.time_budget = limits.time_budget;
    auto res = run_palm_baseline(*problem, work.U0, work.V0, bc, sink);
    if (spec.name == "palm") out.h1_a = 0.0;
    copy_common(out, res);
    finish_outcome(out, work, nullptr, &res.x, &res.y);
    return out;
  }

  PalmConfig<double> c = palm_config_for(spec, limits);
  if (work.kind == "mc") {
    const double l1 = problem->lipschitz_x(work.V0), l2 = problem->lipschitz_y(work.U0);
    if (c.tau1_init == 0.0 && l1 > 0) c.tau1_init = 100.0 / l1;
    if (c.tau2_init == 0.0 && l2 > 0) c.tau2_init = 100.0 / l2;
  }
  auto res = run_palm(*problem, work.U0, work.V0, c, sink);
  out.palm = res.config;
  out.line_search = true;
  out.memory = res.config.memory;
  out.h1_a = res.config.alpha / 2.0;
  out.lipschitz = res.lipschitz_estimate;
  out.warnings = res.warnings;
  double rx = 0.0, ry = 0.0;
  for (const TraceRecord& r : res.trace) {
    rx = std::max(rx, r.x_norm);
    ry = std::max(ry, r.y_norm);
  }
  const double scale = 1.0 + 2.0 * res.config.beta_max;
  const CouplingBounds<double> cb = problem->coupling_bounds(scale * rx, scale * ry);
  out.h2_b = palm_witness_constant(cb.joint_lipschitz_x, cb.max_lipschitz_y, res.config.tau_lo, res.config.beta_max,
                                   res.config.delta);
  copy_common(out, res);
  finish_outcome(out, work, nullptr, &res.x, &res.y);
  return out;
}

BacktrackCheck check_backtrack_bound(const SolverOutcome& outcome) {
  BacktrackCheck chk;
  if (!outcome.pg && !outcome.palm) return chk;
  chk.applicable = true;
  chk.min_slack = std::numeric_limits<std::int64_t>::max();
  for (std::size_t i = 1; i < outcome.trace.size(); ++i) {
    const TraceRecord& r = outcome.trace[i];
    std::int64_t bound;
    if (outcome.pg) {
      const PgConfig<double>& c = *outcome.pg;
      bound = pg_backtrack_bound(r.beta0, r.tau1_0, outcome.lipschitz, c.alpha, c.delta, c.eta1, c.eta2, c.tau_min);
    } else {
      const PalmConfig<double>& c = *outcome.palm;
      bound = palm_backtrack_bound(r.beta0, r.tau1_0, r.tau2_0, r.lipschitz_x, r.lipschitz_y_max, c.alpha, c.delta,
                                   c.eta, c.eta1, c.eta2, c.tau_lo);
    }
    chk.max_backtracks = std::max(chk.max_backtracks, r.backtracks);
    if (bound < 0) {
      ++chk.uncertified;
      continue;
    }
    chk.min_slack = std::min(chk.min_slack, bound - r.backtracks);
    if (r.backtracks > bound) {
      ++chk.violations;
      if (chk.pass) chk.first_violation = r.k;
      chk.pass = false;
    }
  }
  if (chk.min_slack == std::numeric_limits<std::int64_t>::max()) chk.min_slack = 0;
  return chk;
}

RateReport rate_report(const std::vector<TraceRecord>& trace) {
  RateReport rep;
  const RateTail tail = objective_gap_tail(trace);
  try {
    rep.linear = fit_rate(tail.k, tail.gaps, RateMode::linear);
  } catch (const RateFitError& e) {
    rep.errors.push_back(std::string("linear: ") + e.what());
  }
  try {
    rep.sublinear = fit_rate(tail.k, tail.gaps, RateMode::sublinear);
  } catch (const RateFitError& e) {
    rep.errors.push_back(std::string("sublinear: ") + e.what());
  }
  return rep;
}

DiagReport run_diag(std::vector<TraceRecord>& trace, const TraceColumns& columns, const DiagParams& params) {
  DiagReport rep;
  const double a = params.alpha / 2.0;
  rep.h1 = verify_H1(trace, params.memory, a);
  if (!columns.witness)
    rep.warnings.push_back("trace has no witness_norm column; H2 section skipped");
  else if (!params.b)
    rep.warnings.push_back("no H2 constant given; H2 section skipped");
  else
    rep.h2 = verify_H2(trace, *params.b);
  rep.ksets = classify_ksets(trace, a, params.theta);
  annotate_ksets(trace, rep.ksets);
  rep.sums = condition_partial_sums(rep.ksets);
  return rep;
}

PlotPanel partial_sum_panel(const PartialSums& sums, const std::string& title) {
  PlotPanel p;
  p.title = title;
  p.x_label = "k";
  p.y_label = "partial sum";
  p.log_y = true;
  PlotSeries k1{"sum over K1 of sqrt(gap)", {}, sums.k1};
  PlotSeries ref{"sum 3000/sqrt(k^2.1)", {}, sums.reference};
  for (std::size_t i = 0; i < sums.k1.size(); ++i) {
    k1.x.push_back(static_cast<double>(i));
    ref.x.push_back(static_cast<double>(i));
  }
  p.series = {std::move(k1), std::move(ref)};
  return p;
}

namespace {

/// Compact per-run record kept by the bench after the trace is reduced.
struct BenchRun {
  bool ok = false;
  std::string failure;
  std::vector<double> clock;
  std::vector<double> objective;
  double final_objective = kNaN;
  std::int64_t sparsity = -1;
  std::int64_t rank = -1;
};

std::vector<std::vector<BenchRun>> run_trials(const BenchConfig& cfg, const ProblemSpec& problem, int jobs) {
  const auto trials = static_cast<std::size_t>(cfg.trials);
  std::vector<std::vector<BenchRun>> results(trials);
  RunLimits limits = cfg.limits;
  if (cfg.replay) limits.time_budget = std::numeric_limits<double>::infinity();
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < trials; t = next++) {
      std::vector<BenchRun> row(cfg.solvers.size());
      std::optional<Workload> work;
      std::string setup_error;
      try {
        work = make_workload(problem, derive_seed(cfg.seed, t));
      } catch (const std::exception& e) {
        setup_error = e.what();
      }
      for (std::size_t s = 0; s < cfg.solvers.size(); ++s) {
        BenchRun& run = row[s];
        if (!work) {
          run.failure = setup_error;
          continue;
        }
        try {
          SolverOutcome o = run_solver(*work, cfg.solvers[s], limits);
          if (o.stop == StopReason::backtrack_limit) {
            run.failure = o.error;
            continue;
          }
          run.ok = true;
          for (const TraceRecord& r : o.trace) {
            run.clock.push_back(cfg.clock == BenchClock::iterations ? static_cast<double>(r.k) : r.time_s);
            run.objective.push_back(r.objective);
          }
          run.final_objective = o.final_objective;
          run.sparsity = o.sparsity;
          run.rank = o.rank.u_columns >= 0 ? o.rank.u_columns + o.rank.v_columns : -1;
        } catch (const std::exception& e) {
          run.failure = e.what();
        }
      }
      results[t] = std::move(row);
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(trials)));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return results;
}

std::vector<double> curve_from(const BenchRun& run, double f_min, const std::vector<double>& grid) {
  const double denom = run.objective.front() - f_min;
  std::vector<double> out;
  out.reserve(grid.size());
  std::size_t next = 0;
  double best = std::numeric_limits<double>::infinity();
  for (double t : grid) {
    while (next < run.clock.size() && run.clock[next] <= t) {
      best = std::min(best, (run.objective[next] - f_min) / denom);
      ++next;
    }
    out.push_back(next == 0 ? 1.0 : std::clamp(best, 0.0, 1.0));
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

BenchResult run_bench(const BenchConfig& config, int jobs) {
  BenchResult result;
  result.clock = config.clock;
  std::vector<std::optional<double>> lambdas;
  if (config.lambdas.empty())
    lambdas.push_back(config.problem.lambda);
  else
    for (double l : config.lambdas) lambdas.emplace_back(l);

  for (const auto& lambda : lambdas) {
    ProblemSpec problem = config.problem;
    problem.lambda = lambda;
    const auto runs = run_trials(config, problem, jobs);

    BenchPanel panel;
    panel.lambda = lambda.value_or(1.0);
    double horizon = 0.0;
    for (const auto& row : runs)
      for (const BenchRun& r : row)
        if (r.ok && !r.clock.empty()) horizon = std::max(horizon, r.clock.back());
    const auto points = static_cast<std::size_t>(config.grid_points);
    for (std::size_t i = 0; i < points; ++i)
      panel.grid.push_back(horizon * static_cast<double>(i) / static_cast<double>(points - 1));

    panel.solvers.resize(config.solvers.size());
    std::vector<std::vector<std::vector<double>>> curves(config.solvers.size());
    for (std::size_t s = 0; s < config.solvers.size(); ++s) panel.solvers[s].label = config.solvers[s].label();
    for (std::size_t t = 0; t < runs.size(); ++t) {
      double f_min = std::numeric_limits<double>::infinity();
      for (const BenchRun& r : runs[t])
        if (r.ok) f_min = std::min(f_min, r.final_objective);
      for (std::size_t s = 0; s < runs[t].size(); ++s) {
        const BenchRun& r = runs[t][s];
        BenchSolverSummary& sum = panel.solvers[s];
        sum.final_objective.push_back(r.final_objective);
        sum.sparsity.push_back(r.sparsity);
        sum.rank.push_back(r.rank);
        if (!r.ok) {
          sum.terminal.push_back(kNaN);
          sum.failures.push_back("trial " + std::to_string(t) + ": " + r.failure);
          continue;
        }
        if (!(r.objective.front() - f_min > 0.0)) {
          sum.terminal.push_back(kNaN);
          sum.failures.push_back("trial " + std::to_string(t) + ": F(x0) equals F_min");
          continue;
        }
        curves[s].push_back(curve_from(r, f_min, panel.grid));
        const double best = *std::min_element(r.objective.begin(), r.objective.end());
        sum.terminal.push_back(std::clamp((best - f_min) / (r.objective.front() - f_min), 0.0, 1.0));
      }
    }
    for (std::size_t s = 0; s < config.solvers.size(); ++s) {
      BenchSolverSummary& sum = panel.solvers[s];
      if (curves[s].empty()) {
        sum.excluded = true;
        sum.mean_curve.assign(panel.grid.size(), kNaN);
        result.notes.push_back("lambda=" + fmt(panel.lambda) + ": " + sum.label + " excluded, failed every trial");
      } else {
        sum.mean_curve = average_curves(curves[s]);
      }
    }
    result.panels.push_back(std::move(panel));
  }
  return result;
}

void write_bench_csv(std::ostream& out, const BenchResult& result) {
  out << "# nmdesc-bench v1 clock=" << (result.clock == BenchClock::time ? "time" : "iterations") << '\n';
  for (const std::string& note : result.notes) out << "# " << note << '\n';
  if (result.panels.empty()) return;
  out << "lambda,t";
  for (const auto& s : result.panels.front().solvers) out << ',' << s.label;
  out << '\n';
  for (const BenchPanel& p : result.panels) {
    for (std::size_t i = 0; i < p.grid.size(); ++i) {
      out << fmt(p.lambda) << ',' << fmt(p.grid[i]);
      for (const auto& s : p.solvers) out << ',' << fmt(s.mean_curve[i]);
      out << '\n';
    }
  }
}

void write_bench_summary_csv(std::ostream& out, const BenchResult& result) {
  out << "lambda,trial,solver,terminal_E,final_objective,sparsity,rank\n";
  for (const BenchPanel& p : result.panels)
    for (const auto& s : p.solvers)
      for (std::size_t t = 0; t < s.terminal.size(); ++t)
        out << fmt(p.lambda) << ',' << t << ',' << s.label << ',' << fmt(s.terminal[t]) << ','
            << fmt(s.final_objective[t]) << ',' << s.sparsity[t] << ',' << s.rank[t] << '\n';
}

std::vector<PlotPanel> bench_panels(const BenchResult& result) {
  std::vector<PlotPanel> panels;
  for (const BenchPanel& p : result.panels) {
    PlotPanel panel;
    panel.title = "lambda = " + fmt(p.lambda);
    panel.x_label = result.clock == BenchClock::time ? "time (s)" : "iteration";
    panel.y_label = "average E(t)";
    panel.log_y = true;
    for (const auto& s : p.solvers) {
      if (s.excluded) continue;
      panel.series.push_back({s.label, p.grid, s.mean_curve});
    }
    panels.push_back(std::move(panel));
  }
  return panels;
}

}  // namespace nmdesc
