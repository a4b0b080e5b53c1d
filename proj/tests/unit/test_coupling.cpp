#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "torvac/coupling.hpp"
#include "torvac/experiments.hpp"
#include "torvac/rng.hpp"

using namespace torvac;

namespace {

SummaryHistogram draw(const std::vector<double>& law, std::uint64_t n, std::uint64_t stream) {
  auto h = SummaryHistogram::empty(SummaryAxis::entry, 3, 1);
  CounterRng rng(77, stream);
  for (std::uint64_t i = 0; i < n; ++i) {
    double u = rng.uniform(), acc = 0;
    std::size_t a = 0;
    for (; a + 1 < law.size(); ++a) {
      acc += law[a];
      if (u < acc) break;
    }
    h.add(a, 1);
  }
  return h;
}

}  // namespace

TEST_SUITE("coupling") {
  TEST_CASE("plug-in total variation") {
    CHECK(tv_raw({0.5, 0.5}, {0.5, 0.5}) == 0.0);
    CHECK(tv_raw({1.0, 0.0}, {0.0, 1.0}) == doctest::Approx(2.0));
    CHECK(tv_raw({0.2, 0.3, 0.5}, {0.3, 0.3, 0.4}) == doctest::Approx(0.2));
    CHECK_THROWS(tv_raw({1.0}, {0.5, 0.5}));
  }

  TEST_CASE("maximal coupling") {
    const std::vector<double> p{0.2, 0.3, 0.5}, q{0.3, 0.3, 0.4};
    const auto c = maximal_coupling(p, q);
    REQUIRE(c.atoms == 3);
    CHECK(c.mismatch == doctest::Approx(0.1));
    double off = 0;
    for (std::size_t i = 0; i < 3; ++i) {
      double row = 0, col = 0;
      for (std::size_t j = 0; j < 3; ++j) {
        CHECK(c.at(i, j) >= 0.0);
        row += c.at(i, j);
        col += c.at(j, i);
        if (i != j) off += c.at(i, j);
      }
      CHECK(row == doctest::Approx(p[i]));
      CHECK(col == doctest::Approx(q[i]));
      CHECK(c.at(i, i) == doctest::Approx(std::min(p[i], q[i])));
    }
    CHECK(off == doctest::Approx(0.1));
    CHECK_THROWS(maximal_coupling({0.5, 0.5}, {1.0}));
  }

  TEST_CASE("trace buckets") {
    CHECK(trace_bucket(1) == 0);
    CHECK(trace_bucket(2) == 1);
    CHECK(trace_bucket(3) == 2);
    CHECK(trace_bucket(4) == 2);
    CHECK(trace_bucket(5) == 3);
    CHECK(trace_bucket(8) == 3);
    CHECK(trace_bucket(9) == 4);
    CHECK_THROWS(trace_bucket(0));
    CHECK(trace_bucket_count(3, 0) == 1);
    CHECK(trace_bucket_count(3, 1) == 6);
  }

  TEST_CASE("histograms") {
    auto a = SummaryHistogram::empty(SummaryAxis::joint, 3, 1);
    CHECK(a.counts.size() == 26 * 6);
    a.add(3, 5);
    CHECK(a.counts[3 * 6 + 3] == 1);
    auto b = SummaryHistogram::empty(SummaryAxis::joint, 3, 1);
    b.add(3, 6);
    b.add(0, 1);
    a.merge(b);
    CHECK(a.total == 3);
    CHECK(a.counts[3 * 6 + 3] == 2);
    CHECK(a.counts[0] == 1);
    const auto c = SummaryHistogram::empty(SummaryAxis::trace, 3, 1);
    CHECK_FALSE(a.same_atoms(c));
    CHECK_THROWS(a.merge(c));
    CHECK_THROWS(a.add(26, 1));
  }

  TEST_CASE("distance estimates") {
    std::vector<double> p(26, 1.0 / 26);
    const auto same = tv_distance(draw(p, 20000, 1), draw(p, 20000, 2), 200, 3);
    // Under equal laws the plug-in distance sits near sum_a E|N(0, 2 p_a / n)|.
    const double null_mean = 26 * std::sqrt(2.0 * (1.0 / 26) * (25.0 / 26) / 20000) * std::sqrt(2.0 / M_PI);
    CHECK(std::abs(same.raw - null_mean) < 0.3 * null_mean);
    CHECK(same.bias_corrected < same.raw);
    CHECK(same.ci.lo <= same.bias_corrected);
    CHECK(same.ci.hi >= same.bias_corrected);

    std::vector<double> q = p;
    q[0] += 0.05;
    q[1] += 0.05;
    q[2] -= 0.0384;
    q[3] -= 0.0384;
    // Rebalance the last atom so that q sums to 1.
    q[25] += 1.0 - std::accumulate(q.begin(), q.end(), 0.0);
    const double truth = tv_raw(p, q);
    const auto far = tv_distance(draw(p, 50000, 4), draw(q, 50000, 5), 300, 6);
    CHECK(far.ci.contains(truth));
    CHECK(std::abs(far.bias_corrected - truth) < std::abs(far.raw - truth) + 0.01);
    CHECK(far.n_p == 50000);
    CHECK_THROWS(tv_distance(SummaryHistogram::empty(SummaryAxis::entry, 3, 1),
                             SummaryHistogram::empty(SummaryAxis::trace, 3, 1)));
  }

  TEST_CASE("coupling geometry") {
    CHECK(CouplingGeometry::default_N(20) == 88);
    CHECK(CouplingGeometry::default_N(1) == 12);
    const auto g = CouplingGeometry::standard(3, 1, 10, CouplingGeometry::default_N(10));
    CHECK_NOTHROW(g.validate());
    CHECK(g.centers.size() == 2);
    CHECK_THROWS_AS(CouplingGeometry::standard(3, 2, 10, 60).validate(), ConfigError);
    CHECK_THROWS_AS(CouplingGeometry::standard(3, 1, 10, 40).validate(), ConfigError);
    CHECK_THROWS_AS(CouplingGeometry::standard(2, 0, 10, 60).validate(), ConfigError);
  }

  TEST_CASE("excursion sampler") {
    const auto g = CouplingGeometry::standard(3, 1, 10, CouplingGeometry::default_N(10));
    const auto s = sample_Quw(g, 300, 11);
    REQUIRE(s.summaries.size() == 300);
    std::uint64_t strata = 0;
    for (const auto& [exit, count] : s.strata()) {
      CHECK(zd_linf_norm(exit, 3) == 11);
      strata += count;
    }
    CHECK(strata == 300);
    const auto entries = box_boundary(3, 1);
    for (const auto& e : s.summaries) {
      CHECK(e.entry < entries.size());
      CHECK(e.trace >= 1);
      CHECK(e.trace <= 27);
      CHECK((e.center == 0 || e.center == 1));
    }
    const auto again = sample_Quw(g, 300, 11);
    for (std::size_t i = 0; i < 300; ++i) {
      CHECK(again.summaries[i].entry == s.summaries[i].entry);
      CHECK(again.summaries[i].trace == s.summaries[i].trace);
      CHECK(again.summaries[i].exit == s.summaries[i].exit);
    }
  }
}
