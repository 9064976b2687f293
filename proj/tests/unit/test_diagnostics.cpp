#include "nmdesc/diagnostics.hpp"
#include "nmdesc/linalg.hpp"
#include "nmdesc/trace.hpp"

#include "../oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace nmdesc;

namespace {

TraceRecord row(std::int64_t k, double potential, double step, std::int64_t ell) {
  TraceRecord r;
  r.k = k;
  r.objective = potential;
  r.potential = potential;
  r.step_norm = step;
  r.ell = ell;
  return r;
}

}  // namespace

TEST_SUITE("diagnostics") {
  TEST_CASE("H1 replay uses the previous m+1 potentials") {
    const std::vector<TraceRecord> t = {row(0, 10, 0, 0), row(1, 9, 1, 0), row(2, 9.4, 0.8, 0), row(3, 8, 1, 1)};
    const auto ok = verify_H1(t, 1, 0.5);
    CHECK(ok.pass);
    CHECK(ok.checked == 3);
    const auto bad = verify_H1(t, 0, 0.5);
    CHECK_FALSE(bad.pass);
    CHECK(bad.first_violation == 2);
    // a monotone trace with zero steps passes with equality
    CHECK(verify_H1({row(0, 1, 0, 0), row(1, 1, 0, 1)}, 0, 1.0).pass);
  }

  TEST_CASE("H2 ratios and zero steps") {
    std::vector<TraceRecord> t = {row(0, 1, 0, 0), row(1, 1, 2.0, 1), row(2, 1, 0.5, 2)};
    t[1].witness_norm = 3.0;
    t[2].witness_norm = 2.0;
    auto h = verify_H2(t, 4.0);
    CHECK(h.pass);
    CHECK(h.max_ratio == doctest::Approx(4.0));
    h = verify_H2(t, 3.9);
    CHECK_FALSE(h.pass);
    CHECK(h.first_violation == 2);
    t.push_back(row(3, 1, 0.0, 3));
    t[3].witness_norm = 1e-20;
    h = verify_H2(t, 100.0);
    CHECK(h.zero_step_violation);
    t[3].witness_norm = 0.0;
    CHECK(verify_H2(t, 100.0).pass);
  }

  TEST_CASE("K-set classification table") {
    // a = 0.1, theta = 0.75, Phi* = potential at the final ell (row 3) = 8.985
    const std::vector<TraceRecord> t = {row(0, 10, 0, 0),      row(1, 9, 1.0, 0),   row(2, 9.5, 0.5, 1),
                                        row(3, 8.985, 0.5, 1), row(4, 8.0, 0.2, 3), row(5, 7.9, 0.1, 3)};
    const auto rep = classify_ksets(t, 0.1, 0.75);
    CHECK(rep.omega_star == 8.985);
    REQUIRE(rep.k.size() == 5);
    const std::vector<double> gaps = {1.0, -0.5, 0.015, 0.985, 1.085};
    const std::vector<int> k1 = {1, 0, 1, 1, 1}, k2 = {0, 0, 1, 0, 0}, k31 = {0, 0, 0, 1, 1}, k32 = {1, 0, 0, 0, 0};
    for (std::size_t i = 0; i < 5; ++i) {
      CAPTURE(i);
      CHECK(rep.k[i] == static_cast<std::int64_t>(i));
      CHECK(rep.gap[i] == doctest::Approx(gaps[i]));
      CHECK(int(rep.k1[i]) == k1[i]);
      CHECK(int(rep.k2[i]) == k2[i]);
      CHECK(int(rep.k31[i]) == k31[i]);
      CHECK(int(rep.k32[i]) == k32[i]);
    }
    const auto sums = condition_partial_sums(rep);
    const double s3 = 1.0 + std::sqrt(0.015);
    CHECK(sums.k1[1] == doctest::Approx(1.0));
    CHECK(sums.k1[2] == doctest::Approx(s3));
    CHECK(sums.k1[4] == doctest::Approx(s3 + std::sqrt(0.985) + std::sqrt(1.085)));
    CHECK(sums.k2_k31[0] == 0.0);
    CHECK(sums.k2_k31[4] == doctest::Approx(std::sqrt(0.015) + std::sqrt(0.985) + std::sqrt(1.085)));
    for (std::size_t i = 0; i < 5; ++i)
      CHECK(sums.reference[i] == doctest::Approx(oracle::reference_partial_sum(static_cast<std::int64_t>(i) + 1)));
    CHECK(sums.reference[0] == 3000.0);

    std::vector<TraceRecord> annotated = t;
    annotate_ksets(annotated, rep);
    CHECK(annotated[1].in_k1);
    CHECK_FALSE(annotated[2].in_k1);
    CHECK(annotated[3].in_k2);
    CHECK(annotated[4].in_k31);
  }

  TEST_CASE("a monotone trace has an all-zero K1 sum") {
    std::vector<TraceRecord> t = {row(0, 5, 0, 0)};
    for (int k = 1; k < 30; ++k) t.push_back(row(k, 5.0 - 0.1 * k, 0.3, k));
    const auto sums = condition_partial_sums(classify_ksets(t, 1e-5));
    for (double v : sums.k1) CHECK(v == 0.0);
  }

  TEST_CASE("window maxima and Xi follow the ell column") {
    const std::vector<TraceRecord> t = {row(0, 10, 0, 0), row(1, 11, 2, 1), row(2, 9, 3, 1)};
    const auto w = window_max_series(t);
    CHECK(w == std::vector<double>{10, 11, 11});
    const auto xi = xi_series(t);
    CHECK(xi == std::vector<double>{0, 2, 2});
    std::vector<TraceRecord> broken = t;
    broken[2].ell = 7;
    CHECK_THROWS_AS(classify_ksets(broken, 0.1), std::invalid_argument);
  }

  TEST_CASE("rate fits recover planted parameters") {
    std::vector<double> k, geo, poly, flat;
    for (int i = 1; i <= 200; ++i) {
      k.push_back(i);
      geo.push_back(3.0 * std::pow(0.9, i));
      poly.push_back(5.0 / (static_cast<double>(i) * i));
      flat.push_back(1.0);
    }
    const auto lin = fit_rate(k, geo, RateMode::linear);
    CHECK(lin.rho == doctest::Approx(0.9).epsilon(1e-10));
    CHECK(lin.r2 == doctest::Approx(1.0));
    const auto sub = fit_rate(k, poly, RateMode::sublinear);
    CHECK(sub.theta == doctest::Approx(0.6).epsilon(1e-10));
    CHECK(sub.slope == doctest::Approx(-2.0));
    CHECK_THROWS_AS(fit_rate(k, flat, RateMode::linear), RateFitError);
    std::vector<double> short_k(k.begin(), k.begin() + 19), short_g(geo.begin(), geo.begin() + 19);
    CHECK_THROWS_AS(fit_rate(short_k, short_g, RateMode::linear), RateFitError);
    std::vector<double> cut = geo;
    cut[50] = 0.0;
    const auto trunc = fit_rate(k, cut, RateMode::linear);
    CHECK(trunc.points == 50);
    CHECK(trunc.warnings.size() == 1);
  }

  TEST_CASE("noisy geometric decay keeps rho within two percent") {
    RngStream rng(3);
    std::vector<double> k, g;
    for (int i = 0; i < 300; ++i) {
      k.push_back(i);
      g.push_back(std::pow(0.95, i) * std::exp(0.05 * rng.normal()));
    }
    CHECK(std::abs(fit_rate(k, g, RateMode::linear).rho / 0.95 - 1.0) < 0.02);
  }

  TEST_CASE("rate tail starts after the first backtrack-free step") {
    std::vector<TraceRecord> t;
    for (int i = 0; i <= 40; ++i) {
      TraceRecord r = row(i, 1.0 + std::pow(0.5, i), 0.1, i);
      r.backtracks = i < 10 ? 1 : 0;
      t.push_back(r);
    }
    t[0].backtracks = 0;
    const auto tail = objective_gap_tail(t);
    // rows 10..40, last half starts at 10 + 31/2 = 25
    CHECK(tail.k.front() == 25);
    CHECK(tail.k.back() == 40);
    CHECK(tail.gaps.back() == 0.0);
  }

  TEST_CASE("E(t) is the clamped prefix minimum") {
    std::vector<TraceRecord> t;
    const double obj[] = {10, 7, 8, 5, 6};
    for (int i = 0; i < 5; ++i) {
      TraceRecord r = row(i, obj[i], 0, i);
      r.time_s = i;
      t.push_back(r);
    }
    const std::vector<double> grid = {-1, 0, 0.5, 1, 2.5, 3, 10};
    const auto e = evolution_curve(t, 5.0, grid);
    const std::vector<double> expected = {1, 1, 1, 0.4, 0.4, 0, 0};
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(e[i] == doctest::Approx(expected[i]));
    const auto clamped = evolution_curve(t, 6.0, grid);
    CHECK(clamped.back() == 0.0);
    const auto by_iter = evolution_curve(t, 5.0, {0, 1, 2, 3}, true);
    CHECK(by_iter[1] == doctest::Approx(0.4));
    CHECK_THROWS_AS(evolution_curve({}, 1.0, grid), EvolutionError);
    CHECK_THROWS_AS(evolution_curve(t, 10.0, grid), EvolutionError);
    for (std::size_t i = 1; i < e.size(); ++i) CHECK(e[i] <= e[i - 1]);
  }

  TEST_CASE("terminal minimum and averaging") {
    const std::vector<std::vector<TraceRecord>> traces = {{row(0, 3, 0, 0), row(1, 2, 0, 1)}, {row(0, 3, 0, 0)}, {}};
    CHECK(terminal_minimum(traces) == 2.0);
    CHECK(average_curves({{1, 2}, {3, 4}}) == std::vector<double>{2, 3});
    CHECK_THROWS_AS(average_curves({{1}, {1, 2}}), std::invalid_argument);
  }
}

TEST_SUITE("trace-io") {
  TEST_CASE("trace CSV round-trips losslessly") {
    RngStream rng(10);
    std::vector<TraceRecord> t;
    for (int i = 0; i < 25; ++i) {
      TraceRecord r;
      r.k = i;
      r.time_s = rng.uniform();
      r.objective = rng.normal() * 1e5;
      r.potential = rng.normal();
      r.step_norm = rng.uniform() * 1e-300;
      r.witness_norm = i == 0 ? kNaN : rng.uniform();
      r.beta = rng.uniform();
      r.tau1 = 1.0 / 3.0;
      r.tau2 = kNaN;
      r.backtracks = i % 4;
      r.ell = i / 2;
      r.in_k1 = i % 2;
      r.in_k31 = i % 3 == 0;
      t.push_back(r);
    }
    std::stringstream ss;
    write_trace_csv(ss, t);
    TraceColumns cols;
    const auto back = read_trace_csv(ss, &cols);
    CHECK(cols.witness);
    CHECK(cols.ksets);
    REQUIRE(back.size() == t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      CHECK(back[i].k == t[i].k);
      CHECK(back[i].time_s == t[i].time_s);
      CHECK(back[i].objective == t[i].objective);
      CHECK(back[i].potential == t[i].potential);
      CHECK(back[i].step_norm == t[i].step_norm);
      CHECK((back[i].witness_norm == t[i].witness_norm || (std::isnan(back[i].witness_norm) && std::isnan(t[i].witness_norm))));
      CHECK(back[i].tau1 == t[i].tau1);
      CHECK(std::isnan(back[i].tau2));
      CHECK(back[i].backtracks == t[i].backtracks);
      CHECK(back[i].ell == t[i].ell);
      CHECK(back[i].in_k1 == t[i].in_k1);
      CHECK(back[i].in_k31 == t[i].in_k31);
    }
    std::stringstream again;
    write_trace_csv(again, back);
    std::stringstream first;
    write_trace_csv(first, t);
    CHECK(again.str() == first.str());
  }

  TEST_CASE("replay zeroes wall times") {
    std::vector<TraceRecord> t = {row(0, 1, 0, 0)};
    t[0].time_s = 3.25;
    std::stringstream ss;
    write_trace_csv(ss, t, true);
    CHECK(read_trace_csv(ss)[0].time_s == 0.0);
  }

  TEST_CASE("optional columns may be missing") {
    std::istringstream in("k,objective,potential,step_norm,ell\n0,1,1,0,0\n1,0.5,0.5,0.1,1\n");
    TraceColumns cols;
    const auto t = read_trace_csv(in, &cols);
    CHECK_FALSE(cols.witness);
    CHECK_FALSE(cols.ksets);
    CHECK(t.size() == 2);
    CHECK(std::isnan(t[1].witness_norm));
  }

  TEST_CASE("parse errors carry line numbers") {
    std::istringstream bad_number("# nmdesc-trace v1\nk,objective,potential,step_norm,ell\n0,1,1,0,0\n1,x,1,0,0\n");
    try {
      read_trace_csv(bad_number);
      FAIL("expected a parse error");
    } catch (const TraceParseError& e) {
      CHECK(e.line() == 4);
    }
    std::istringstream missing("k,objective,step_norm,ell\n");
    CHECK_THROWS_AS(read_trace_csv(missing), TraceParseError);
    std::istringstream ragged("k,objective,potential,step_norm,ell\n0,1,1,0\n");
    CHECK_THROWS_AS(read_trace_csv(ragged), TraceParseError);
    std::istringstream version("# nmdesc-trace v9\nk,objective,potential,step_norm,ell\n");
    CHECK_THROWS_AS(read_trace_csv(version), TraceParseError);
    std::istringstream order("k,objective,potential,step_norm,ell\n1,1,1,0,0\n1,1,1,0,0\n");
    CHECK_THROWS_AS(read_trace_csv(order), TraceParseError);
    std::istringstream empty("");
    CHECK_THROWS_AS(read_trace_csv(empty), TraceParseError);
  }

  TEST_CASE("stop reasons have stable names") {
    CHECK(to_string(StopReason::tolerance) == "tolerance");
    CHECK(to_string(StopReason::backtrack_limit) == "backtrack_limit");
    CHECK(to_string(StopReason::stagnation) == "stagnation");
  }
}
