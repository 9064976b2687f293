#pragma once

#include "nmdesc/linalg.hpp"
#include "nmdesc/nls.hpp"
#include "nmdesc/pg.hpp"
#include "nmdesc/problem.hpp"
#include "nmdesc/trace.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nmdesc {

/// Parameters of the two-block line-search method. Zero-valued tau1_init /
/// tau2_init mean "ask the problem" (see palm_initial_steps()).
template <typename Scalar>
struct PalmConfig {
  std::size_t memory = 5;
  Scalar delta = Scalar(0.01);
  Scalar alpha = Scalar(1e-5);
  Scalar tau_lo = Scalar(1e-8);
  Scalar tau_hi = Scalar(1e8);
  Scalar tau1_init = Scalar(0);
  Scalar tau2_init = Scalar(0);
  Scalar beta_max = Scalar(1);
  Scalar eta = Scalar(0.01);
  Scalar eta1 = Scalar(0.5);
  Scalar eta2 = Scalar(0.5);
  BetaRule beta_rule = BetaRule::nesterov;
  bool bb_steps = true;
  int max_backtracks = 60;
  Scalar stop_tol = Scalar(1e-8);
  std::int64_t max_iters = 5000;
  double time_budget = std::numeric_limits<double>::infinity();

  Scalar safe_step(Scalar lipschitz) const { return Scalar(1) / (lipschitz + delta + Scalar(2) * alpha); }

  /// Throws std::invalid_argument unless 0 < delta < 1, 0 < alpha <= delta/2 and
  /// tau_lo < 1/(L + delta + 2 alpha) < tau_hi for the given estimate of L.
  void validate(Scalar lipschitz) const {
    if (!(delta > 0 && delta < 1)) throw std::invalid_argument("PalmConfig: delta must lie in (0,1)");
    if (!(alpha > 0 && alpha <= delta / Scalar(2)))
      throw std::invalid_argument("PalmConfig: alpha must lie in (0, delta/2]");
    const Scalar safe = safe_step(lipschitz);
    if (!(tau_lo > 0 && tau_lo < safe && safe < tau_hi))
      throw std::invalid_argument("PalmConfig: need 0 < tau_lo < 1/(L+delta+2 alpha) < tau_hi");
    if (!(eta > 0 && eta < 1 && eta1 > 0 && eta1 < 1 && eta2 > 0 && eta2 < 1))
      throw std::invalid_argument("PalmConfig: eta, eta1, eta2 must lie in (0,1)");
    if (!(beta_max >= 0)) throw std::invalid_argument("PalmConfig: beta_max must be nonnegative");
    if (max_backtracks < 0) throw std::invalid_argument("PalmConfig: max_backtracks must be >= 0");
  }
};

enum class PalmVariant { palmenls, palmnls, palmels, palmls };

template <typename Scalar>
PalmConfig<Scalar> with_variant(PalmConfig<Scalar> config, PalmVariant variant) {
  switch (variant) {
    case PalmVariant::palmenls:
      break;
    case PalmVariant::palmnls:
      config.beta_max = 0;
      break;
    case PalmVariant::palmels:
      config.memory = 0;
      break;
    case PalmVariant::palmls:
      config.beta_max = 0;
      config.memory = 0;
      break;
  }
  return config;
}

/// Upsilon_delta(x, y, u, v) = Psi(x, y) + (delta/2)(||x - u||^2 + ||y - v||^2).
template <typename Scalar>
Scalar potential_upsilon(const MatrixX<Scalar>& x, const MatrixX<Scalar>& y, const MatrixX<Scalar>& u,
                         const MatrixX<Scalar>& v, const BlockProblem<Scalar>& problem, Scalar delta) {
  return problem.objective(x, y) + delta / Scalar(2) * ((x - u).squaredNorm() + (y - v).squaredNorm());
}

/// min over blocks of sqrt(0.25 delta g / (L g + (g + delta)^2)), g = 1/tau - L - delta.
/// Zero when either 1/tau <= L + delta.
template <typename Scalar>
Scalar safe_beta_bound_palm(Scalar tau1, Scalar tau2, Scalar l1, Scalar l2, Scalar delta) {
  auto term = [delta](Scalar tau, Scalar lip) {
    const Scalar gap = Scalar(1) / tau - lip - delta;
    if (!(gap > 0)) return Scalar(0);
    const Scalar inv = Scalar(1) / tau - lip;
    return std::sqrt(Scalar(0.25) * delta * gap / (lip * gap + inv * inv));
  };
  return std::min(term(tau1, l1), term(tau2, l2));
}

/// Backtrack bound implied by the two-block descent lemma, computed from the
/// quantities logged for one iteration (l2_max is the largest L2 over trial
/// x-updates). Returns -1 when no finite bound is certified.
template <typename Scalar>
std::int64_t palm_backtrack_bound(Scalar beta0, Scalar tau1_0, Scalar tau2_0, Scalar l1, Scalar l2_max,
                                  Scalar alpha, Scalar delta, Scalar eta, Scalar eta1, Scalar eta2,
                                  Scalar tau_lo) {
  const Scalar lip = std::max(l1, l2_max);
  const Scalar safe = Scalar(1) / (lip + delta + Scalar(2) * alpha);
  auto tau_at = [&](Scalar tau0, Scalar e, std::int64_t l) {
    return std::max(tau0 * std::pow(e, static_cast<Scalar>(l)), tau_lo);
  };
  std::int64_t l_tau = 0;
  while (true) {
    const Scalar t1 = tau_at(tau1_0, eta1, l_tau);
    const Scalar t2 = tau_at(tau2_0, eta2, l_tau);
    if (std::max(t1, t2) <= safe) break;
    if ((t1 == tau_lo && t2 == tau_lo) || ++l_tau > 100000) return -1;
  }
  // smallest safe beta over the remaining step range, up to where both floors bind
  Scalar bound = std::numeric_limits<Scalar>::infinity();
  for (std::int64_t l = l_tau;; ++l) {
    const Scalar t1 = tau_at(tau1_0, eta1, l);
    const Scalar t2 = tau_at(tau2_0, eta2, l);
    bound = std::min(bound, safe_beta_bound_palm(t1, t2, l1, l2_max, delta));
    if ((t1 == tau_lo && t2 == tau_lo) || l > l_tau + 10000) break;
  }
  std::int64_t l_beta = 0;
  if (beta0 > bound) {
    if (!(bound > 0)) return -1;
    l_beta = static_cast<std::int64_t>(std::ceil(std::log(bound / beta0) / std::log(eta)));
  }
  return l_tau + l_beta + 1;
}

/// 2 delta + 2 max(1, beta_max)(M + 2/tau_lo + Lbar2).
template <typename Scalar>
Scalar palm_witness_constant(Scalar joint_lipschitz_x, Scalar max_lipschitz_y, Scalar tau_lo,
                             Scalar beta_max, Scalar delta) {
  return Scalar(2) * delta +
         Scalar(2) * std::max(Scalar(1), beta_max) *
             (joint_lipschitz_x + Scalar(2) / tau_lo + max_lipschitz_y);
}

/// z^k = (x^k, y^k, x^{k-1}, y^{k-1}) plus cached partial gradients at (x^k, y^k)
/// and the data of the step that produced it.
template <typename Scalar>
struct PalmState {
  using Block = MatrixX<Scalar>;

  Block x, y, x_prev, y_prev;
  Block grad_x;  ///< grad_x H(x^k, y^k)
  Block grad_y;  ///< grad_y H(x^k, y^k)
  Scalar objective = 0;
  HistoryWindow<Scalar> window;
  Scalar t_prev = 1;
  Scalar t_cur = 1;
  std::int64_t k = 0;
  Scalar last_tau1_init = 0;
  Scalar last_tau2_init = 0;
  Scalar lipschitz_estimate = 0;  ///< running max of L1(y^j), L2(x^j)

  bool has_step = false;
  Block x_tilde_last, y_tilde_last;
  Block grad_x_tilde_last;  ///< grad_x H(x~^{k-1}, y^{k-1})
  Block grad_y_tilde_last;  ///< grad_y H(x^k, y~^{k-1})
  Scalar tau1_last = 0;
  Scalar tau2_last = 0;
};

template <typename Scalar>
std::pair<Scalar, Scalar> palm_initial_steps(const BlockProblem<Scalar>& problem, const MatrixX<Scalar>& x0,
                                             const MatrixX<Scalar>& y0, Scalar tau_hi) {
  const Scalar l1 = problem.lipschitz_x(y0);
  const Scalar l2 = problem.lipschitz_y(x0);
  return {l1 > 0 ? Scalar(1) / l1 : tau_hi, l2 > 0 ? Scalar(1) / l2 : tau_hi};
}

template <typename Scalar>
PalmState<Scalar> init_palm_state(const BlockProblem<Scalar>& problem, const MatrixX<Scalar>& x0,
                                  const MatrixX<Scalar>& y0, std::size_t memory) {
  PalmState<Scalar> s;
  s.x = s.x_prev = x0;
  s.y = s.y_prev = y0;
  s.grad_x = problem.coupling_grad_x(x0, y0);
  s.grad_y = problem.coupling_grad_y(x0, y0);
  s.objective = problem.objective(x0, y0);
  if (!std::isfinite(s.objective)) throw std::invalid_argument("init_palm_state: start outside dom Psi");
  s.window = HistoryWindow<Scalar>(memory);
  s.window.push(0, s.objective);
  s.lipschitz_estimate = std::max(problem.lipschitz_x(y0), problem.lipschitz_y(x0));
  return s;
}

template <typename Scalar>
struct BlockSteps {
  Scalar tau1;
  Scalar tau2;
};

/// Per-block BB initialization. The x-difference of grad_x H is taken at the
/// current y^k, the y-difference of grad_y H at the current x^k.
template <typename Scalar>
BlockSteps<Scalar> bb_init_tau_blocks(const PalmState<Scalar>& s, const BlockProblem<Scalar>& problem,
                                      Scalar tau_lo, Scalar tau_hi) {
  const MatrixX<Scalar> dx = s.x - s.x_prev;
  const MatrixX<Scalar> dy = s.y - s.y_prev;
  BlockSteps<Scalar> out{s.last_tau1_init, s.last_tau2_init};
  if (dx.squaredNorm() > 0) {
    const MatrixX<Scalar> dhx = s.grad_x - problem.coupling_grad_x(s.x_prev, s.y);
    out.tau1 = bb_step_length(dx.squaredNorm(), (dx.array() * dhx.array()).sum(), dhx.squaredNorm(), tau_lo,
                              tau_hi, s.last_tau1_init);
  }
  if (dy.squaredNorm() > 0) {
    const MatrixX<Scalar> dhy = s.grad_y - problem.coupling_grad_y(s.x, s.y_prev);
    out.tau2 = bb_step_length(dy.squaredNorm(), (dy.array() * dhy.array()).sum(), dhy.squaredNorm(), tau_lo,
                              tau_hi, s.last_tau2_init);
  }
  return out;
}

template <typename Scalar>
struct PalmWitness {
  MatrixX<Scalar> wx, wy, wu, wv;
  Scalar norm;
};

/// Four-block element of the subdifferential of Upsilon_delta at z^k.
template <typename Scalar>
PalmWitness<Scalar> subgrad_witness_palm(const PalmState<Scalar>& s, Scalar delta) {
  if (!s.has_step) throw std::logic_error("subgrad_witness_palm: no accepted step yet");
  PalmWitness<Scalar> w;
  w.wx = s.grad_x - s.grad_x_tilde_last - (s.x - s.x_tilde_last) / s.tau1_last + delta * (s.x - s.x_prev);
  w.wy = s.grad_y - s.grad_y_tilde_last - (s.y - s.y_tilde_last) / s.tau2_last + delta * (s.y - s.y_prev);
  w.wu = delta * (s.x_prev - s.x);
  w.wv = delta * (s.y_prev - s.y);
  w.norm = std::sqrt(w.wx.squaredNorm() + w.wy.squaredNorm() + w.wu.squaredNorm() + w.wv.squaredNorm());
  return w;
}

template <typename Scalar>
struct PalmStepRecord {
  int backtracks = 0;
  Scalar beta0 = 0, beta = 0;
  Scalar tau1_0 = 0, tau2_0 = 0, tau1 = 0, tau2 = 0;
  Scalar step_norm = 0, potential = 0, objective = 0, witness_norm = 0;
  Scalar lipschitz_x = 0;      ///< L1(y^k)
  Scalar lipschitz_y_max = 0;  ///< max L2 over trial x-updates
  std::int64_t ell = 0;
};

template <typename Scalar>
class BlockBacktrackLimitError : public std::runtime_error {
 public:
  BlockBacktrackLimitError(const std::string& what, MatrixX<Scalar> x, MatrixX<Scalar> y,
                           Scalar min_excess, Scalar reference)
      : std::runtime_error(what),
        x_(std::move(x)),
        y_(std::move(y)),
        min_excess_(min_excess),
        reference_(reference) {}
  const MatrixX<Scalar>& last_x() const { return x_; }
  const MatrixX<Scalar>& last_y() const { return y_; }
  Scalar min_excess() const { return min_excess_; }
  Scalar reference() const { return reference_; }
  bool roundoff_stall() const { return detail::within_roundoff(min_excess_, reference_); }

 private:
  MatrixX<Scalar> x_, y_;
  Scalar min_excess_;
  Scalar reference_;
};

/// One outer iteration: x-update at the extrapolated x~ with y^k fixed, then the
/// y-update at y~ using the new x^{k+1}; both are redone on every backtrack.
template <typename Scalar>
PalmStepRecord<Scalar> palm_step(PalmState<Scalar>& s, const BlockProblem<Scalar>& problem,
                                 const PalmConfig<Scalar>& cfg) {
  using Block = MatrixX<Scalar>;
  PalmStepRecord<Scalar> rec;

  Scalar t_next = s.t_cur;
  if (cfg.beta_rule == BetaRule::nesterov) {
    const auto nb = nesterov_beta(s.t_prev, s.t_cur);
    rec.beta0 = std::min(nb.beta0, cfg.beta_max);
    t_next = nb.t_next;
  } else {
    rec.beta0 = cfg.beta_max;
  }

  if (s.k == 0 || !cfg.bb_steps) {
    rec.tau1_0 = std::clamp(cfg.tau1_init, cfg.tau_lo, cfg.tau_hi);
    rec.tau2_0 = std::clamp(cfg.tau2_init, cfg.tau_lo, cfg.tau_hi);
  } else {
    const auto bb = bb_init_tau_blocks(s, problem, cfg.tau_lo, cfg.tau_hi);
    rec.tau1_0 = bb.tau1;
    rec.tau2_0 = bb.tau2;
  }
  rec.lipschitz_x = problem.lipschitz_x(s.y);

  const Block dx = s.x - s.x_prev;
  const Block dy = s.y - s.y_prev;
  const Scalar prev_sq = dx.squaredNorm() + dy.squaredNorm();
  Block x_tilde, y_tilde, gx, gy, xn, yn;
  const Scalar wmax = s.window.max().first;
  Scalar min_excess = std::numeric_limits<Scalar>::infinity();
  for (int l = 0; l <= cfg.max_backtracks; ++l) {
    const Scalar beta = rec.beta0 * std::pow(cfg.eta, l);
    const Scalar tau1 = std::max(rec.tau1_0 * std::pow(cfg.eta1, l), cfg.tau_lo);
    const Scalar tau2 = std::max(rec.tau2_0 * std::pow(cfg.eta2, l), cfg.tau_lo);

    x_tilde = s.x + beta * dx;
    gx = beta == Scalar(0) ? s.grad_x : problem.coupling_grad_x(x_tilde, s.y);
    xn = problem.prox_f(x_tilde - tau1 * gx, tau1);
    y_tilde = s.y + beta * dy;
    gy = problem.coupling_grad_y(xn, y_tilde);
    yn = problem.prox_g(y_tilde - tau2 * gy, tau2);
    rec.lipschitz_y_max = std::max(rec.lipschitz_y_max, problem.lipschitz_y(xn));

    const Scalar objective = problem.objective(xn, yn);
    const Scalar new_sq = (xn - s.x).squaredNorm() + (yn - s.y).squaredNorm();
    const Scalar step_norm = std::sqrt(new_sq + prev_sq);
    const Scalar potential = objective + cfg.delta / Scalar(2) * new_sq;
    if (std::isfinite(potential) && accept(potential, s.window, cfg.alpha, step_norm * step_norm)) {
      s.x_prev = std::move(s.x);
      s.y_prev = std::move(s.y);
      s.x = std::move(xn);
      s.y = std::move(yn);
      s.grad_x = problem.coupling_grad_x(s.x, s.y);
      s.grad_y = problem.coupling_grad_y(s.x, s.y);
      s.objective = objective;
      s.k += 1;
      s.window.push(s.k, potential);
      s.last_tau1_init = rec.tau1_0;
      s.last_tau2_init = rec.tau2_0;
      if (cfg.beta_rule == BetaRule::nesterov) {
        s.t_prev = s.t_cur;
        s.t_cur = t_next;
      }
      s.has_step = true;
      s.x_tilde_last = std::move(x_tilde);
      s.y_tilde_last = std::move(y_tilde);
      s.grad_x_tilde_last = std::move(gx);
      s.grad_y_tilde_last = std::move(gy);
      s.tau1_last = tau1;
      s.tau2_last = tau2;
      s.lipschitz_estimate =
          std::max({s.lipschitz_estimate, problem.lipschitz_x(s.y), problem.lipschitz_y(s.x)});

      rec.backtracks = l;
      rec.beta = beta;
      rec.tau1 = tau1;
      rec.tau2 = tau2;
      rec.step_norm = step_norm;
      rec.potential = potential;
      rec.objective = objective;
      rec.witness_norm = subgrad_witness_palm(s, cfg.delta).norm;
      rec.ell = s.window.max().second;
      return rec;
    }
    if (std::isfinite(potential))
      min_excess = std::min(min_excess, potential - (wmax - cfg.alpha / Scalar(2) * step_norm * step_norm));
  }
  throw BlockBacktrackLimitError<Scalar>("palm_step: backtrack limit exceeded at k=" + std::to_string(s.k),
                                         std::move(xn), std::move(yn), min_excess, wmax);
}

template <typename Scalar>
struct PalmRunResult {
  MatrixX<Scalar> x, y;
  std::vector<TraceRecord> trace;
  StopReason stop = StopReason::max_iters;
  std::string error;
  PalmConfig<Scalar> config;  ///< with initial steps filled in
  std::vector<std::string> warnings;
  Scalar lipschitz_estimate = 0;
};

namespace detail {

template <typename Scalar>
TraceRecord palm_record(std::int64_t k, double time_s, const PalmStepRecord<Scalar>& rec) {
  TraceRecord r;
  r.k = k;
  r.time_s = time_s;
  r.objective = static_cast<double>(rec.objective);
  r.potential = static_cast<double>(rec.potential);
  r.step_norm = static_cast<double>(rec.step_norm);
  r.witness_norm = static_cast<double>(rec.witness_norm);
  r.beta = static_cast<double>(rec.beta);
  r.tau1 = static_cast<double>(rec.tau1);
  r.tau2 = static_cast<double>(rec.tau2);
  r.backtracks = rec.backtracks;
  r.ell = rec.ell;
  r.beta0 = static_cast<double>(rec.beta0);
  r.tau1_0 = static_cast<double>(rec.tau1_0);
  r.tau2_0 = static_cast<double>(rec.tau2_0);
  r.lipschitz_x = static_cast<double>(rec.lipschitz_x);
  r.lipschitz_y_max = static_cast<double>(rec.lipschitz_y_max);
  return r;
}

}  // namespace detail

template <typename Scalar>
PalmRunResult<Scalar> run_palm(const BlockProblem<Scalar>& problem, const MatrixX<Scalar>& x0,
                               const MatrixX<Scalar>& y0, const PalmConfig<Scalar>& config,
                               const TraceSink& sink = {}) {
  const auto start = std::chrono::steady_clock::now();
  PalmRunResult<Scalar> out;
  out.config = config;
  const auto init = palm_initial_steps(problem, x0, y0, config.tau_hi);
  if (out.config.tau1_init == Scalar(0)) out.config.tau1_init = init.first;
  if (out.config.tau2_init == Scalar(0)) out.config.tau2_init = init.second;
  const PalmConfig<Scalar>& cfg = out.config;

  PalmState<Scalar> s = init_palm_state(problem, x0, y0, cfg.memory);
  cfg.validate(s.lipschitz_estimate);
  bool warned = false;

  auto emit = [&](TraceRecord r) {
    out.trace.push_back(r);
    if (sink) sink(out.trace.back());
  };
  TraceRecord first;
  first.time_s = detail::seconds_since(start);
  first.objective = static_cast<double>(s.objective);
  first.potential = first.objective;
  first.step_norm = 0.0;
  first.x_norm = static_cast<double>(s.x.norm());
  first.y_norm = static_cast<double>(s.y.norm());
  emit(first);

  out.stop = StopReason::max_iters;
  while (s.k < cfg.max_iters) {
    PalmStepRecord<Scalar> rec;
    try {
      rec = palm_step(s, problem, cfg);
    } catch (const BlockBacktrackLimitError<Scalar>& e) {
      if (e.roundoff_stall()) {
        out.stop = StopReason::stagnation;
      } else {
        out.stop = StopReason::backtrack_limit;
        out.error = e.what();
      }
      break;
    }
    if (!warned && !(cfg.tau_lo < cfg.safe_step(s.lipschitz_estimate))) {
      out.warnings.push_back("Lipschitz estimate " + std::to_string(static_cast<double>(s.lipschitz_estimate)) +
                             " violates tau_lo < 1/(L+delta+2 alpha) at k=" + std::to_string(s.k));
      warned = true;
    }
    TraceRecord r = detail::palm_record(s.k, detail::seconds_since(start), rec);
    r.x_norm = static_cast<double>(s.x.norm());
    r.y_norm = static_cast<double>(s.y.norm());
    emit(r);
    const Scalar z_norm = std::sqrt(s.x.squaredNorm() + s.y.squaredNorm());
    if (detail::witness_small(rec.witness_norm, z_norm, cfg.stop_tol)) {
      out.stop = StopReason::tolerance;
      break;
    }
    if (r.time_s >= cfg.time_budget) {
      out.stop = StopReason::time_budget;
      break;
    }
  }
  out.lipschitz_estimate = s.lipschitz_estimate;
  out.x = std::move(s.x);
  out.y = std::move(s.y);
  return out;
}

/// Classical PALM (beta_max = 0) and PALM with Nesterov extrapolation, both with
/// steps 1/L1(y^k) and 1/L2(x^{k+1}) and no line search.
template <typename Scalar>
struct PalmBaselineConfig {
  Scalar beta_max = Scalar(0);
  Scalar tau_hi = Scalar(1e8);
  Scalar stop_tol = Scalar(1e-8);
  std::int64_t max_iters = 5000;
  double time_budget = std::numeric_limits<double>::infinity();
};

template <typename Scalar>
PalmRunResult<Scalar> run_palm_baseline(const BlockProblem<Scalar>& problem, const MatrixX<Scalar>& x0,
                                        const MatrixX<Scalar>& y0, const PalmBaselineConfig<Scalar>& config,
                                        const TraceSink& sink = {}) {
  using Block = MatrixX<Scalar>;
  const auto start = std::chrono::steady_clock::now();
  PalmRunResult<Scalar> out;
  out.config.memory = 0;
  out.config.delta = 0;
  out.config.beta_max = config.beta_max;
  out.config.max_iters = config.max_iters;

  auto step_for = [&](Scalar lip) { return lip > 0 ? std::min(Scalar(1) / lip, config.tau_hi) : config.tau_hi; };
  auto emit = [&](TraceRecord r) {
    out.trace.push_back(r);
    if (sink) sink(out.trace.back());
  };

  Block x = x0, y = y0, x_prev = x0, y_prev = y0;
  TraceRecord first;
  first.time_s = detail::seconds_since(start);
  first.objective = static_cast<double>(problem.objective(x, y));
  first.potential = first.objective;
  first.step_norm = 0.0;
  first.x_norm = static_cast<double>(x.norm());
  first.y_norm = static_cast<double>(y.norm());
  emit(first);

  Scalar t_prev = 1, t_cur = 1;
  out.stop = StopReason::max_iters;
  for (std::int64_t k = 0; k < config.max_iters; ++k) {
    const auto nb = nesterov_beta(t_prev, t_cur);
    const Scalar beta = std::min(nb.beta0, config.beta_max);
    t_prev = t_cur;
    t_cur = nb.t_next;

    PalmStepRecord<Scalar> rec;
    rec.lipschitz_x = problem.lipschitz_x(y);
    const Scalar tau1 = step_for(rec.lipschitz_x);
    const Block x_tilde = x + beta * (x - x_prev);
    const Block gx = problem.coupling_grad_x(x_tilde, y);
    Block xn = problem.prox_f(x_tilde - tau1 * gx, tau1);
    rec.lipschitz_y_max = problem.lipschitz_y(xn);
    const Scalar tau2 = step_for(rec.lipschitz_y_max);
    const Block y_tilde = y + beta * (y - y_prev);
    const Block gy = problem.coupling_grad_y(xn, y_tilde);
    Block yn = problem.prox_g(y_tilde - tau2 * gy, tau2);

    const Block wx = problem.coupling_grad_x(xn, yn) - gx - (xn - x_tilde) / tau1;
    const Block wy = problem.coupling_grad_y(xn, yn) - gy - (yn - y_tilde) / tau2;
    rec.witness_norm = std::sqrt(wx.squaredNorm() + wy.squaredNorm());
    rec.objective = problem.objective(xn, yn);
    rec.potential = rec.objective;
    rec.step_norm = std::sqrt((xn - x).squaredNorm() + (yn - y).squaredNorm() + (x - x_prev).squaredNorm() +
                              (y - y_prev).squaredNorm());
    rec.beta0 = rec.beta = beta;
    rec.tau1_0 = rec.tau1 = tau1;
    rec.tau2_0 = rec.tau2 = tau2;
    rec.ell = k + 1;

    x_prev = std::move(x);
    y_prev = std::move(y);
    x = std::move(xn);
    y = std::move(yn);
    TraceRecord r = detail::palm_record(k + 1, detail::seconds_since(start), rec);
    r.x_norm = static_cast<double>(x.norm());
    r.y_norm = static_cast<double>(y.norm());
    emit(r);
    const Scalar z_norm = std::sqrt(x.squaredNorm() + y.squaredNorm());
    if (detail::witness_small(rec.witness_norm, z_norm, config.stop_tol)) {
      out.stop = StopReason::tolerance;
      break;
    }
    if (r.time_s >= config.time_budget) {
      out.stop = StopReason::time_budget;
      break;
    }
  }
  out.x = std::move(x);
  out.y = std::move(y);
  return out;
}

}  // namespace nmdesc
