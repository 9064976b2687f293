#include "nmdesc/diagnostics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <unordered_map>

namespace nmdesc {

H1Result verify_H1(const std::vector<TraceRecord>& trace, std::size_t memory, double a) {
  H1Result out;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    const std::size_t lo = i - 1 >= memory ? i - 1 - memory : 0;
    double wmax = -std::numeric_limits<double>::infinity();
    for (std::size_t j = lo; j < i; ++j) wmax = std::max(wmax, trace[j].potential);
    const double step = trace[i].step_norm;
    ++out.checked;
    if (!(trace[i].potential <= wmax - a * (step * step))) {
      out.pass = false;
      out.first_violation = trace[i].k;
      return out;
    }
  }
  return out;
}

H2Result verify_H2(const std::vector<TraceRecord>& trace, double b) {
  H2Result out;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    const double w = trace[i].witness_norm;
    const double step = trace[i].step_norm;
    if (std::isnan(w)) continue;
    ++out.checked;
    if (step == 0.0) {
      if (w != 0.0) {
        out.zero_step_violation = true;
        out.max_ratio = std::numeric_limits<double>::infinity();
        if (out.pass) out.first_violation = trace[i].k;
        out.pass = false;
      }
      continue;
    }
    const double ratio = w / step;
    out.max_ratio = std::max(out.max_ratio, ratio);
    if (!(w <= b * step) && out.pass) {
      out.pass = false;
      out.first_violation = trace[i].k;
    }
  }
  return out;
}

namespace {

/// Row position of each iteration index.
std::unordered_map<std::int64_t, std::size_t> index_rows(const std::vector<TraceRecord>& trace) {
  std::unordered_map<std::int64_t, std::size_t> rows;
  rows.reserve(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) rows[trace[i].k] = i;
  return rows;
}

double potential_at(const std::vector<TraceRecord>& trace, const std::unordered_map<std::int64_t, std::size_t>& rows,
                    std::int64_t k) {
  const auto it = rows.find(k);
  if (it == rows.end()) throw std::invalid_argument("trace has no row for ell index " + std::to_string(k));
  return trace[it->second].potential;
}

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

KsetReport classify_ksets(const std::vector<TraceRecord>& trace, double a, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("classify_ksets: theta must lie in (0,1)");
  KsetReport rep;
  rep.a = a;
  rep.theta = theta;
  if (trace.empty()) return rep;
  const auto rows = index_rows(trace);
  rep.omega_star = potential_at(trace, rows, trace.back().ell);
  const double power = 1.0 / theta;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    const TraceRecord& r = trace[i];
    const double phi = r.potential;
    const double gap = potential_at(trace, rows, r.ell) - phi;
    const double step = r.step_norm;
    const bool in1 = gap >= a / 2.0 * (step * step);
    const bool in2 = in1 && gap < a / 2.0 * std::pow(step, power);
    const bool in31 = in1 && !in2 && rep.omega_star - phi > a / 4.0 * std::pow(step, power);
    rep.k.push_back(r.k - 1);
    rep.gap.push_back(gap);
    rep.step.push_back(step);
    rep.k1.push_back(in1);
    rep.k2.push_back(in2);
    rep.k31.push_back(in31);
    rep.k32.push_back(in1 && !in2 && !in31);
  }
  return rep;
}

void annotate_ksets(std::vector<TraceRecord>& trace, const KsetReport& report) {
  const auto rows = index_rows(trace);
  for (std::size_t i = 0; i < report.k.size(); ++i) {
    const auto it = rows.find(report.k[i] + 1);
    if (it == rows.end()) continue;
    TraceRecord& r = trace[it->second];
    r.in_k1 = report.k1[i];
    r.in_k2 = report.k2[i];
    r.in_k31 = report.k31[i];
  }
}

PartialSums condition_partial_sums(const KsetReport& report) {
  PartialSums out;
  double s1 = 0.0, s23 = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < report.k.size(); ++i) {
    const double root = std::sqrt(std::max(report.gap[i], 0.0));
    if (report.k1[i]) s1 += root;
    if (report.k2[i] || report.k31[i]) s23 += root;
    const double j = static_cast<double>(i + 1);
    ref += 3000.0 / std::sqrt(std::pow(j, 2.1));
    out.k1.push_back(s1);
    out.k2_k31.push_back(s23);
    out.reference.push_back(ref);
  }
  return out;
}

void write_kset_csv(std::ostream& out, const KsetReport& report, const PartialSums& sums) {
  out << "# nmdesc-ksets v1 a=" << fmt(report.a) << " theta=" << fmt(report.theta)
      << " omega_star=" << fmt(report.omega_star) << (report.omega_estimated ? " (estimated)" : "") << '\n';
  out << "k,gap,step_norm,in_K1,in_K2,in_K31,in_K32,sum_K1,sum_K2_K31,reference\n";
  for (std::size_t i = 0; i < report.k.size(); ++i) {
    out << report.k[i] << ',' << fmt(report.gap[i]) << ',' << fmt(report.step[i]) << ',' << int(report.k1[i]) << ','
        << int(report.k2[i]) << ',' << int(report.k31[i]) << ',' << int(report.k32[i]) << ',' << fmt(sums.k1[i])
        << ',' << fmt(sums.k2_k31[i]) << ',' << fmt(sums.reference[i]) << '\n';
  }
}

std::vector<double> window_max_series(const std::vector<TraceRecord>& trace) {
  const auto rows = index_rows(trace);
  std::vector<double> out;
  out.reserve(trace.size());
  for (const TraceRecord& r : trace) out.push_back(potential_at(trace, rows, r.ell));
  return out;
}

std::vector<double> xi_series(const std::vector<TraceRecord>& trace) {
  const auto rows = index_rows(trace);
  std::vector<double> out;
  out.reserve(trace.size());
  for (const TraceRecord& r : trace) {
    const auto it = rows.find(r.ell);
    out.push_back(it == rows.end() ? std::numeric_limits<double>::quiet_NaN() : trace[it->second].step_norm);
  }
  return out;
}

RateFit fit_rate(const std::vector<double>& k, const std::vector<double>& gaps, RateMode mode) {
  if (k.size() != gaps.size()) throw std::invalid_argument("fit_rate: k and gaps differ in length");
  RateFit fit;
  fit.mode = mode;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    if (!(gaps[i] > 0.0)) {
      fit.warnings.push_back("nonpositive gap at k=" + fmt(k[i]) + "; series truncated there");
      break;
    }
    double x = k[i];
    if (mode == RateMode::sublinear) {
      if (!(k[i] > 0.0)) throw RateFitError("fit_rate: sublinear mode needs positive k");
      x = std::log(k[i]);
    }
    xs.push_back(x);
    ys.push_back(std::log(gaps[i]));
  }
  fit.points = xs.size();
  if (fit.points < 20) throw RateFitError("fit_rate: fewer than 20 positive gaps");

  const double n = static_cast<double>(fit.points);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw RateFitError("fit_rate: degenerate abscissae");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (!(syy > 0.0) || !(fit.slope < -1e-12)) throw RateFitError("fit_rate: gaps do not decay");
  fit.r2 = 1.0 - (syy - fit.slope * sxy) / syy;
  if (mode == RateMode::linear) {
    fit.rho = std::exp(fit.slope);
  } else {
    fit.theta = (fit.slope - 1.0) / (2.0 * fit.slope - 1.0);
  }
  return fit;
}

RateTail objective_gap_tail(const std::vector<TraceRecord>& trace, double floor) {
  RateTail tail;
  if (trace.size() < 2) return tail;
  std::size_t start = trace.size();
  for (std::size_t i = 1; i < trace.size(); ++i)
    if (trace[i].backtracks == 0) {
      start = i;
      break;
    }
  if (start >= trace.size()) return tail;
  const std::size_t from = start + (trace.size() - start) / 2;
  const double final_value = trace.back().objective;
  const double cut = floor * std::max(1.0, std::abs(final_value));
  for (std::size_t i = from; i < trace.size(); ++i) {
    const double gap = trace[i].objective - final_value;
    tail.k.push_back(static_cast<double>(trace[i].k));
    tail.gaps.push_back(gap > cut ? gap : 0.0);
  }
  return tail;
}

std::vector<double> evolution_curve(const std::vector<TraceRecord>& trace, double f_min,
                                    const std::vector<double>& grid, bool use_iterations) {
  if (trace.empty()) throw EvolutionError("evolution_curve: empty trace");
  const double f0 = trace.front().objective;
  const double denom = f0 - f_min;
  if (!(denom > 0.0)) throw EvolutionError("evolution_curve: F(x0) equals F_min, degenerate instance");
  std::vector<double> out;
  out.reserve(grid.size());
  std::size_t next = 0;
  double best = std::numeric_limits<double>::infinity();
  for (double t : grid) {
    while (next < trace.size()) {
      const double when = use_iterations ? static_cast<double>(trace[next].k) : trace[next].time_s;
      if (when > t) break;
      best = std::min(best, (trace[next].objective - f_min) / denom);
      ++next;
    }
    out.push_back(next == 0 ? 1.0 : std::clamp(best, 0.0, 1.0));
  }
  return out;
}

double terminal_minimum(const std::vector<std::vector<TraceRecord>>& traces) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& t : traces)
    if (!t.empty()) best = std::min(best, t.back().objective);
  return best;
}

std::vector<double> average_curves(const std::vector<std::vector<double>>& curves) {
  if (curves.empty()) return {};
  std::vector<double> out(curves.front().size(), 0.0);
  for (const auto& c : curves) {
    if (c.size() != out.size()) throw std::invalid_argument("average_curves: curve lengths differ");
    for (std::size_t i = 0; i < c.size(); ++i) out[i] += c[i];
  }
  for (double& v : out) v /= static_cast<double>(curves.size());
  return out;
}

}  // namespace nmdesc
