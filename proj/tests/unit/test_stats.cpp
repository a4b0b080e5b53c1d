#include <cmath>
#include <vector>

#include "doctest.h"
#include "torvac/stats.hpp"

using namespace torvac;

TEST_SUITE("stats") {
  TEST_CASE("summary") {
    const std::vector<double> x{1, 2, 3, 4};
    const auto s = stats::summarize(x);
    CHECK(s.n == 4);
    CHECK(s.mean == doctest::Approx(2.5));
    CHECK(s.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(s.sem == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  }

  TEST_CASE("quantiles") {
    CHECK(stats::normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
    CHECK(stats::t_quantile(10, 0.975) == doctest::Approx(2.228139).epsilon(1e-5));
  }

  TEST_CASE("wilson interval brackets the proportion") {
    const auto w = stats::wilson(30, 100);
    CHECK(w.lo < 0.3);
    CHECK(w.hi > 0.3);
    CHECK(w.lo == doctest::Approx(0.2189).epsilon(1e-3));
    const auto z = stats::wilson(0, 50);
    CHECK(z.lo == doctest::Approx(0.0));
  }

  TEST_CASE("line fit recovers an exact line") {
    const std::vector<double> x{0, 1, 2, 3, 4}, y{1, 3, 5, 7, 9};
    const auto f = stats::fit_line(x, y);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.r2 == doctest::Approx(1.0));
    CHECK(f.intercept_interval().contains(1.0));
  }
}
