#pragma once

#include "nmdesc/linalg.hpp"
#include "nmdesc/nls.hpp"
#include "nmdesc/problem.hpp"
#include "nmdesc/trace.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace nmdesc {

enum class BetaRule { nesterov, constant };

/// Line-search proximal gradient parameters. Zero-valued tau_min / tau_init mean
/// "derive from the problem" (see resolved()).
template <typename Scalar>
struct PgConfig {
  std::size_t memory = 5;
  Scalar delta = Scalar(0.01);
  Scalar alpha = Scalar(1e-5);
  Scalar tau_min = Scalar(0);
  Scalar tau_max = Scalar(1e6);
  Scalar tau_init = Scalar(0);
  Scalar beta_max = Scalar(1);
  Scalar eta1 = Scalar(0.05);
  Scalar eta2 = Scalar(0.1);
  BetaRule beta_rule = BetaRule::nesterov;
  bool bb_steps = true;
  int max_backtracks = 60;
  Scalar stop_tol = Scalar(1e-8);
  std::int64_t max_iters = 5000;
  double time_budget = std::numeric_limits<double>::infinity();

  /// Largest step for which the sufficient-decrease test is guaranteed.
  Scalar safe_step(Scalar lipschitz) const {
    return Scalar(1) / (Scalar(2) * (alpha + delta) + lipschitz);
  }

  /// Copy with automatic fields filled in; throws std::invalid_argument when the
  /// parameters violate 0 < alpha < delta/2 < 1/4 or
  /// tau_min <= 1/(2(alpha+delta)+L_f) < tau_max. delta = 0 is accepted only
  /// together with memory = 0 and beta_max = 0 (plain monotone line search).
  PgConfig resolved(Scalar lipschitz, Scalar default_init) const {
    PgConfig out = *this;
    if (!(lipschitz > 0) || !std::isfinite(lipschitz))
      throw std::invalid_argument("PgConfig: Lipschitz constant must be positive and finite");
    if (out.tau_min == Scalar(0)) out.tau_min = Scalar(1e-3) * out.safe_step(lipschitz);
    if (out.tau_init == Scalar(0)) out.tau_init = default_init;
    if (delta == Scalar(0)) {
      if (memory != 0 || beta_max != Scalar(0))
        throw std::invalid_argument("PgConfig: delta = 0 requires memory = 0 and beta_max = 0");
      if (!(alpha > 0)) throw std::invalid_argument("PgConfig: alpha must be positive");
    } else {
      if (!(delta > 0 && delta < Scalar(0.5)))
        throw std::invalid_argument("PgConfig: delta must lie in (0, 1/2)");
      if (!(alpha > 0 && alpha < delta / Scalar(2)))
        throw std::invalid_argument("PgConfig: alpha must lie in (0, delta/2)");
    }
    const Scalar safe = out.safe_step(lipschitz);
    if (!(out.tau_min > 0 && out.tau_min <= safe && safe < out.tau_max))
      throw std::invalid_argument("PgConfig: need 0 < tau_min <= 1/(2(alpha+delta)+L_f) < tau_max");
    if (!(eta1 > 0 && eta1 < 1 && eta2 > 0 && eta2 < 1))
      throw std::invalid_argument("PgConfig: eta1, eta2 must lie in (0,1)");
    if (!(beta_max >= 0)) throw std::invalid_argument("PgConfig: beta_max must be nonnegative");
    if (max_backtracks < 0) throw std::invalid_argument("PgConfig: max_backtracks must be >= 0");
    return out;
  }
};

enum class PgVariant { pgenls, pgnls, pgels, pgls };

/// pgnls: no extrapolation; pgels: monotone (m = 0); pgls: both, and delta = 0.
template <typename Scalar>
PgConfig<Scalar> with_variant(PgConfig<Scalar> config, PgVariant variant) {
  switch (variant) {
    case PgVariant::pgenls:
      break;
    case PgVariant::pgnls:
      config.beta_max = 0;
      break;
    case PgVariant::pgels:
      config.memory = 0;
      break;
    case PgVariant::pgls:
      config.delta = 0;
      config.beta_max = 0;
      config.memory = 0;
      break;
  }
  return config;
}

template <typename Scalar>
struct NesterovUpdate {
  Scalar beta0;
  Scalar t_next;
};

/// beta0 = (t_prev - 1)/t_cur and t_next = (1 + sqrt(1 + 4 t_cur^2))/2.
template <typename Scalar>
NesterovUpdate<Scalar> nesterov_beta(Scalar t_prev, Scalar t_cur) {
  if (!(t_prev >= 1 && t_cur >= 1)) throw std::invalid_argument("nesterov_beta: counters must be >= 1");
  return {(t_prev - Scalar(1)) / t_cur, (Scalar(1) + std::sqrt(Scalar(1) + Scalar(4) * t_cur * t_cur)) / Scalar(2)};
}

/// Barzilai-Borwein step from secant data, clamped to [tau_min, tau_max].
///
/// Takes ||dz||^2, <dz, dzeta> and ||dzeta||^2. When dz = 0 the fallback is
/// returned; when <dz, dzeta> <= 1e-12 ||dz|| ||dzeta|| both ratios are
/// replaced by tau_max.
template <typename Scalar>
Scalar bb_step_length(Scalar dz_sq, Scalar inner, Scalar dzeta_sq, Scalar tau_min, Scalar tau_max,
                      Scalar fallback) {
  if (dz_sq == Scalar(0)) return fallback;
  const Scalar guard = Scalar(1e-12) * std::sqrt(dz_sq) * std::sqrt(dzeta_sq);
  Scalar candidate = tau_max;
  if (inner > guard) {
    candidate = std::min({dz_sq / inner, inner / dzeta_sq, tau_max});
  }
  return std::max(candidate, tau_min);
}

/// H_delta(x, u) = F(x) + (delta/2)||x - u||^2.
template <typename Scalar>
Scalar potential_H(const VectorX<Scalar>& x, const VectorX<Scalar>& u,
                   const CompositeProblem<Scalar>& problem, Scalar delta) {
  return problem.objective(x) + delta / Scalar(2) * (x - u).squaredNorm();
}

/// beta bound under which the sufficient-decrease test is guaranteed once
/// tau <= 1/(2 alpha + 2 delta + L_f). Zero when tau >= 1/L_f.
template <typename Scalar>
Scalar safe_beta_bound_pg(Scalar tau, Scalar lipschitz, Scalar delta) {
  const Scalar radicand = delta * (tau - tau * tau * lipschitz);
  if (!(radicand > 0)) return Scalar(0);
  const Scalar denom = Scalar(1) + tau * lipschitz;
  return std::sqrt(radicand / (Scalar(4) * denom * denom));
}

/// Upper bound on the accepted backtrack index implied by the step-size lemma:
/// l_tau + l_beta + 1, where l_tau is the first l with tau_l <= 1/(2a+2d+L)
/// and l_beta the number of eta1 contractions needed to bring beta0 under the
/// smallest safe bound over the remaining step range. Returns -1 if beta0 can
/// never be certified (zero safe bound with beta0 > 0).
template <typename Scalar>
std::int64_t pg_backtrack_bound(Scalar beta0, Scalar tau0, Scalar lipschitz, Scalar alpha, Scalar delta,
                                Scalar eta1, Scalar eta2, Scalar tau_min) {
  const Scalar safe = Scalar(1) / (Scalar(2) * alpha + Scalar(2) * delta + lipschitz);
  std::int64_t l_tau = 0;
  Scalar tau = std::max(tau0, tau_min);
  while (tau > safe) {
    if (tau == tau_min) return -1;
    ++l_tau;
    tau = std::max(tau0 * std::pow(eta2, static_cast<Scalar>(l_tau)), tau_min);
    if (l_tau > 100000) return -1;
  }
  const Scalar bound = std::min(safe_beta_bound_pg(tau_min, lipschitz, delta),
                                safe_beta_bound_pg(tau, lipschitz, delta));
  std::int64_t l_beta = 0;
  if (beta0 > bound) {
    if (!(bound > 0)) return -1;
    l_beta = static_cast<std::int64_t>(std::ceil(std::log(bound / beta0) / std::log(eta1)));
  }
  return l_tau + l_beta + 1;
}

/// Iterate state z^k = (x^k, x^{k-1}) plus everything the next step and the
/// subgradient witness need.
template <typename Scalar>
struct PgState {
  using Vector = VectorX<Scalar>;

  Vector x;
  Vector x_prev;
  Vector grad;       ///< grad f(x^k)
  Vector grad_prev;  ///< grad f(x^{k-1})
  Vector diff_prev;  ///< x^{k-1} - x^{k-2}
  Scalar objective = 0;
  HistoryWindow<Scalar> window;
  Scalar t_prev = 1;
  Scalar t_cur = 1;
  std::int64_t k = 0;
  Scalar last_tau_init = 0;

  // Data of the step that produced x^k.
  bool has_step = false;
  Vector y_last;
  Vector grad_y_last;
  Scalar tau_last = 0;
};

template <typename Scalar>
PgState<Scalar> init_pg_state(const CompositeProblem<Scalar>& problem, const VectorX<Scalar>& x0,
                              std::size_t memory) {
  if (x0.size() != problem.dimension()) throw std::invalid_argument("init_pg_state: dimension mismatch");
  PgState<Scalar> s;
  s.x = x0;
  s.x_prev = x0;
  const Scalar fval = problem.smooth_value_grad(x0, s.grad);
  s.grad_prev = s.grad;
  s.diff_prev = VectorX<Scalar>::Zero(x0.size());
  s.objective = fval + problem.nonsmooth_value(x0);
  if (!std::isfinite(s.objective)) throw std::invalid_argument("init_pg_state: x0 outside dom F");
  s.window = HistoryWindow<Scalar>(memory);
  s.window.push(0, s.objective);
  return s;
}

/// Initial step from the BB rule applied to f(x) + (delta/2)||x - u||^2 over z = (x, u).
template <typename Scalar>
Scalar bb_init_tau(const PgState<Scalar>& s, Scalar delta, Scalar tau_min, Scalar tau_max) {
  const VectorX<Scalar> d_cur = s.x - s.x_prev;
  const VectorX<Scalar> dd = d_cur - s.diff_prev;
  const VectorX<Scalar> dzeta_x = (s.grad - s.grad_prev) + delta * dd;
  // dz = (d_cur, diff_prev), dzeta = (dzeta_x, -delta * dd)
  const Scalar dz_sq = d_cur.squaredNorm() + s.diff_prev.squaredNorm();
  const Scalar inner = d_cur.dot(dzeta_x) - delta * s.diff_prev.dot(dd);
  const Scalar dzeta_sq = dzeta_x.squaredNorm() + delta * delta * dd.squaredNorm();
  return bb_step_length(dz_sq, inner, dzeta_sq, tau_min, tau_max, s.last_tau_init);
}

template <typename Scalar>
struct PgWitness {
  VectorX<Scalar> first;
  VectorX<Scalar> second;
  Scalar norm;
};

/// w^k = (grad f(x^k) - grad f(y^{k-1}) - (x^k - y^{k-1})/tau_{k-1} + delta (x^k - x^{k-1}),
///        delta (x^{k-1} - x^k)), an element of the subdifferential of H_delta at z^k.
template <typename Scalar>
PgWitness<Scalar> subgrad_witness_pg(const PgState<Scalar>& s, Scalar delta) {
  if (!s.has_step) throw std::logic_error("subgrad_witness_pg: no accepted step yet");
  PgWitness<Scalar> w;
  w.first = s.grad - s.grad_y_last - (s.x - s.y_last) / s.tau_last + delta * (s.x - s.x_prev);
  w.second = delta * (s.x_prev - s.x);
  w.norm = std::sqrt(w.first.squaredNorm() + w.second.squaredNorm());
  return w;
}

/// sqrt(2)[(L_f + 1/tau_min)(1 + beta_max) + 2 delta].
template <typename Scalar>
Scalar pg_witness_constant(Scalar lipschitz, Scalar tau_min, Scalar beta_max, Scalar delta) {
  return std::sqrt(Scalar(2)) * ((lipschitz + Scalar(1) / tau_min) * (Scalar(1) + beta_max) + Scalar(2) * delta);
}

template <typename Scalar>
class BacktrackLimitError : public std::runtime_error {
 public:
  BacktrackLimitError(const std::string& what, VectorX<Scalar> last_candidate, Scalar min_excess,
                      Scalar reference)
      : std::runtime_error(what),
        last_candidate_(std::move(last_candidate)),
        min_excess_(min_excess),
        reference_(reference) {}
  const VectorX<Scalar>& last_candidate() const { return last_candidate_; }
  /// Smallest amount by which a trial potential exceeded the acceptance threshold.
  Scalar min_excess() const { return min_excess_; }
  /// Window maximum the trials were compared against.
  Scalar reference() const { return reference_; }
  bool roundoff_stall() const { return detail::within_roundoff(min_excess_, reference_); }

 private:
  VectorX<Scalar> last_candidate_;
  Scalar min_excess_;
  Scalar reference_;
};

template <typename Scalar>
struct PgStepRecord {
  int backtracks = 0;
  Scalar beta0 = 0;
  Scalar beta = 0;
  Scalar tau0 = 0;
  Scalar tau = 0;
  Scalar step_norm = 0;
  Scalar potential = 0;
  Scalar objective = 0;
  Scalar witness_norm = 0;
  std::int64_t ell = 0;
};

/// One outer iteration. The config must already be resolved. Updates the state
/// in place; throws BacktrackLimitError when no trial passes within
/// max_backtracks + 1 attempts.
template <typename Scalar>
PgStepRecord<Scalar> pg_step(PgState<Scalar>& s, const CompositeProblem<Scalar>& problem,
                             const PgConfig<Scalar>& cfg) {
  using Vector = VectorX<Scalar>;
  PgStepRecord<Scalar> rec;

  Scalar t_next = s.t_cur;
  if (cfg.beta_rule == BetaRule::nesterov) {
    const auto nb = nesterov_beta(s.t_prev, s.t_cur);
    rec.beta0 = std::min(nb.beta0, cfg.beta_max);
    t_next = nb.t_next;
  } else {
    rec.beta0 = cfg.beta_max;
  }

  if (s.k == 0 || !cfg.bb_steps) {
    rec.tau0 = std::clamp(cfg.tau_init, cfg.tau_min, cfg.tau_max);
  } else {
    rec.tau0 = bb_init_tau(s, cfg.delta, cfg.tau_min, cfg.tau_max);
  }

  const Vector d_prev = s.x - s.x_prev;
  // With delta = 0 the potential is F alone and the lagged block carries no
  // weight, so the step is measured in x only (plain monotone line search).
  const Scalar d_prev_sq = cfg.delta > Scalar(0) ? d_prev.squaredNorm() : Scalar(0);
  Vector y, grad_y, candidate, grad_c;
  const Scalar wmax = s.window.max().first;
  Scalar min_excess = std::numeric_limits<Scalar>::infinity();
  for (int l = 0; l <= cfg.max_backtracks; ++l) {
    const auto bp = backtrack_params(l, rec.beta0, rec.tau0, cfg.eta1, cfg.eta2, cfg.tau_min);
    if (bp.beta == Scalar(0)) {
      y = s.x;
      grad_y = s.grad;
    } else {
      y = s.x + bp.beta * d_prev;
      problem.smooth_value_grad(y, grad_y);
    }
    candidate = problem.prox(y - bp.tau * grad_y, bp.tau);
    const Scalar f_c = problem.smooth_value_grad(candidate, grad_c);
    const Scalar objective_c = f_c + problem.nonsmooth_value(candidate);
    const Scalar d_sq = (candidate - s.x).squaredNorm();
    const Scalar step_norm = std::sqrt(d_sq + d_prev_sq);
    const Scalar potential = objective_c + cfg.delta / Scalar(2) * d_sq;
    if (std::isfinite(potential) && accept(potential, s.window, cfg.alpha, step_norm * step_norm)) {
      s.diff_prev = d_prev;
      s.x_prev = std::move(s.x);
      s.x = std::move(candidate);
      s.grad_prev = std::move(s.grad);
      s.grad = std::move(grad_c);
      s.objective = objective_c;
      s.k += 1;
      s.window.push(s.k, potential);
      s.last_tau_init = rec.tau0;
      if (cfg.beta_rule == BetaRule::nesterov) {
        s.t_prev = s.t_cur;
        s.t_cur = t_next;
      }
      s.has_step = true;
      s.y_last = std::move(y);
      s.grad_y_last = std::move(grad_y);
      s.tau_last = bp.tau;

      rec.backtracks = l;
      rec.beta = bp.beta;
      rec.tau = bp.tau;
      rec.step_norm = step_norm;
      rec.potential = potential;
      rec.objective = objective_c;
      rec.witness_norm = subgrad_witness_pg(s, cfg.delta).norm;
      rec.ell = s.window.max().second;
      return rec;
    }
    if (std::isfinite(potential))
      min_excess = std::min(min_excess, potential - (wmax - cfg.alpha / Scalar(2) * step_norm * step_norm));
  }
  throw BacktrackLimitError<Scalar>("pg_step: backtrack limit exceeded at k=" + std::to_string(s.k),
                                    std::move(candidate), min_excess, wmax);
}

template <typename Scalar>
struct PgRunResult {
  VectorX<Scalar> x;
  std::vector<TraceRecord> trace;
  StopReason stop = StopReason::max_iters;
  std::string error;
  PgConfig<Scalar> config;  ///< resolved
  Scalar lipschitz = 0;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

template <typename Scalar>
bool witness_small(Scalar witness, Scalar x_norm, Scalar tol) {
  return witness <= tol * std::max(Scalar(1), x_norm);
}

}  // namespace detail

/// Runs the line-search method to its stopping rule and returns the trace.
template <typename Scalar>
PgRunResult<Scalar> run_pg(const CompositeProblem<Scalar>& problem, const VectorX<Scalar>& x0,
                           const PgConfig<Scalar>& config, const TraceSink& sink = {}) {
  const auto start = std::chrono::steady_clock::now();
  PgRunResult<Scalar> out;
  out.lipschitz = problem.lipschitz();
  out.config = config.resolved(out.lipschitz, problem.initial_step());
  const PgConfig<Scalar>& cfg = out.config;

  PgState<Scalar> s = init_pg_state(problem, x0, cfg.memory);
  auto emit = [&](TraceRecord r) {
    out.trace.push_back(r);
    if (sink) sink(out.trace.back());
  };
  TraceRecord first;
  first.k = 0;
  first.time_s = detail::seconds_since(start);
  first.objective = static_cast<double>(s.objective);
  first.potential = static_cast<double>(s.objective);
  first.step_norm = 0.0;
  first.ell = 0;
  first.lipschitz_x = static_cast<double>(out.lipschitz);
  first.x_norm = static_cast<double>(s.x.norm());
  emit(first);

  out.stop = StopReason::max_iters;
  while (s.k < cfg.max_iters) {
    PgStepRecord<Scalar> rec;
    try {
      rec = pg_step(s, problem, cfg);
    } catch (const BacktrackLimitError<Scalar>& e) {
      if (e.roundoff_stall()) {
        out.stop = StopReason::stagnation;
      } else {
        out.stop = StopReason::backtrack_limit;
        out.error = e.what();
      }
      break;
    }
    TraceRecord r;
    r.k = s.k;
    r.time_s = detail::seconds_since(start);
    r.objective = static_cast<double>(rec.objective);
    r.potential = static_cast<double>(rec.potential);
    r.step_norm = static_cast<double>(rec.step_norm);
    r.witness_norm = static_cast<double>(rec.witness_norm);
    r.beta = static_cast<double>(rec.beta);
    r.tau1 = static_cast<double>(rec.tau);
    r.backtracks = rec.backtracks;
    r.ell = rec.ell;
    r.beta0 = static_cast<double>(rec.beta0);
    r.tau1_0 = static_cast<double>(rec.tau0);
    r.lipschitz_x = static_cast<double>(out.lipschitz);
    r.x_norm = static_cast<double>(s.x.norm());
    emit(r);
    if (detail::witness_small(rec.witness_norm, s.x.norm(), cfg.stop_tol)) {
      out.stop = StopReason::tolerance;
      break;
    }
    if (r.time_s >= cfg.time_budget) {
      out.stop = StopReason::time_budget;
      break;
    }
  }
  out.x = s.x;
  return out;
}

struct FistaConfig {
  bool restart = false;
  std::int64_t restart_period = 250;
  double stop_tol = 1e-8;
  std::int64_t max_iters = 5000;
  double time_budget = std::numeric_limits<double>::infinity();
};

/// FISTA with fixed step 1/L_f; with restart enabled the Nesterov counters reset
/// when k mod period == 0 (k > 0) or <y^k - x^{k+1}, x^{k+1} - x^k> > 0.
template <typename Scalar>
PgRunResult<Scalar> run_fista(const CompositeProblem<Scalar>& problem, const VectorX<Scalar>& x0,
                              const FistaConfig& config, const TraceSink& sink = {}) {
  using Vector = VectorX<Scalar>;
  const auto start = std::chrono::steady_clock::now();
  PgRunResult<Scalar> out;
  out.lipschitz = problem.lipschitz();
  if (!(out.lipschitz > 0)) throw std::invalid_argument("run_fista: Lipschitz constant must be positive");
  const Scalar tau = Scalar(1) / out.lipschitz;
  out.config.memory = 0;
  out.config.delta = 0;
  out.config.beta_max = 1;
  out.config.tau_min = tau;
  out.config.tau_init = tau;
  out.config.max_iters = config.max_iters;

  auto emit = [&](TraceRecord r) {
    out.trace.push_back(r);
    if (sink) sink(out.trace.back());
  };

  Vector x = x0, x_prev = x0, grad_y, grad_c;
  const Scalar f0 = problem.smooth_value(x0) + problem.nonsmooth_value(x0);
  TraceRecord first;
  first.time_s = detail::seconds_since(start);
  first.objective = static_cast<double>(f0);
  first.potential = first.objective;
  first.step_norm = 0.0;
  first.lipschitz_x = static_cast<double>(out.lipschitz);
  first.x_norm = static_cast<double>(x.norm());
  emit(first);

  Scalar t_prev = 1, t_cur = 1;
  out.stop = StopReason::max_iters;
  for (std::int64_t k = 0; k < config.max_iters; ++k) {
    const auto nb = nesterov_beta(t_prev, t_cur);
    const Vector d_prev = x - x_prev;
    const Vector y = x + nb.beta0 * d_prev;
    problem.smooth_value_grad(y, grad_y);
    Vector candidate = problem.prox(y - tau * grad_y, tau);
    const Scalar objective = problem.smooth_value_grad(candidate, grad_c) + problem.nonsmooth_value(candidate);
    const Vector d = candidate - x;
    const Scalar witness = (grad_c - grad_y - (candidate - y) / tau).norm();

    t_prev = t_cur;
    t_cur = nb.t_next;
    bool restarted = false;
    if (config.restart &&
        ((k > 0 && k % config.restart_period == 0) || (y - candidate).dot(d) > Scalar(0))) {
      t_prev = t_cur = Scalar(1);
      restarted = true;
    }

    TraceRecord r;
    r.k = k + 1;
    r.time_s = detail::seconds_since(start);
    r.objective = static_cast<double>(objective);
    r.potential = r.objective;
    r.step_norm = static_cast<double>(std::sqrt(d.squaredNorm() + d_prev.squaredNorm()));
    r.witness_norm = static_cast<double>(witness);
    r.beta = static_cast<double>(nb.beta0);
    r.tau1 = static_cast<double>(tau);
    r.ell = k + 1;
    r.beta0 = r.beta;
    r.tau1_0 = r.tau1;
    r.lipschitz_x = static_cast<double>(out.lipschitz);
    r.restarted = restarted;
    x_prev = std::move(x);
    x = std::move(candidate);
    r.x_norm = static_cast<double>(x.norm());
    emit(r);
    if (detail::witness_small(witness, x.norm(), static_cast<Scalar>(config.stop_tol))) {
      out.stop = StopReason::tolerance;
      break;
    }
    if (r.time_s >= config.time_budget) {
      out.stop = StopReason::time_budget;
      break;
    }
  }
  out.x = std::move(x);
  return out;
}

}  // namespace nmdesc
