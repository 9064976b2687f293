#include "nmdesc/nls.hpp"

#include <doctest.h>

using nmdesc::HistoryWindow;

TEST_SUITE("nls-engine") {
  TEST_CASE("window keeps m+1 values and resolves ties to the latest index") {
    HistoryWindow<double> w(2);
    w.push(0, 5.0);
    w.push(1, 7.0);
    w.push(2, 7.0);
    auto [value, ell] = w.max();
    CHECK(value == 7.0);
    CHECK(ell == 2);
    w.push(3, 1.0);
    w.push(4, 1.0);
    CHECK(w.size() == 3);
    // window is now {7 @2, 1 @3, 1 @4}
    CHECK(w.max().second == 2);
    w.push(5, 0.5);
    // {1 @3, 1 @4, 0.5 @5}: tie between 3 and 4 goes to 4
    CHECK(w.max().first == 1.0);
    CHECK(w.max().second == 4);
  }

  TEST_CASE("memory zero tracks only the current value") {
    HistoryWindow<double> w(0);
    w.push(0, 3.0);
    w.push(1, 9.0);
    CHECK(w.size() == 1);
    CHECK(w.max().second == 1);
  }

  TEST_CASE("window rejects misuse") {
    HistoryWindow<double> w(1);
    CHECK_THROWS_AS(w.max(), std::logic_error);
    w.push(3, 1.0);
    CHECK_THROWS_AS(w.push(3, 1.0), std::invalid_argument);
  }

  TEST_CASE("acceptance is non-strict") {
    HistoryWindow<double> w(1);
    w.push(0, 10.0);
    w.push(1, 8.0);
    // threshold 10 - 0.5 * 2 * 4 = 6
    CHECK(nmdesc::accept(6.0, w, 2.0, 4.0));
    CHECK_FALSE(nmdesc::accept(std::nextafter(6.0, 7.0), w, 2.0, 4.0));
  }

  TEST_CASE("backtracking schedule") {
    auto p = nmdesc::backtrack_params(0, 0.8, 2.0, 0.5, 0.1, 1e-3);
    CHECK(p.beta == 0.8);
    CHECK(p.tau == 2.0);
    p = nmdesc::backtrack_params(3, 0.8, 2.0, 0.5, 0.1, 1e-3);
    CHECK(p.beta == doctest::Approx(0.1));
    CHECK(p.tau == doctest::Approx(2e-3));
    p = nmdesc::backtrack_params(5, 0.8, 2.0, 0.5, 0.1, 1e-3);
    CHECK(p.tau == 1e-3);  // floor
    CHECK_THROWS_AS(nmdesc::backtrack_params(1, 1.0, 1.0, 1.0, 0.1, 1e-3), std::invalid_argument);
    CHECK_THROWS_AS(nmdesc::backtrack_params(1, 1.0, 1.0, 0.5, 0.1, 0.0), std::invalid_argument);
  }

  TEST_CASE("round-off margin") {
    const double eps = std::numeric_limits<double>::epsilon();
    CHECK(nmdesc::detail::within_roundoff(10 * eps * 100.0, 100.0));
    CHECK_FALSE(nmdesc::detail::within_roundoff(1e-9, 100.0));
    CHECK(nmdesc::detail::within_roundoff(-1.0, 1.0));
  }
}
