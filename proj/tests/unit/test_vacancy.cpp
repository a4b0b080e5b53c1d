#include <algorithm>
#include <map>

#include "brute.hpp"
#include "doctest.h"
#include "torvac/experiments.hpp"
#include "torvac/vacancy.hpp"

using namespace torvac;

namespace {

std::vector<std::uint8_t> random_mask(const TorusGeometry& g, CounterRng& rng, double p) {
  std::vector<std::uint8_t> v(g.cell_count());
  for (auto& x : v) x = rng.uniform() < p ? 1 : 0;
  return v;
}

OccupancyGrid grid_from_mask(const TorusGeometry& g, const std::vector<std::uint8_t>& vac) {
  std::vector<std::uint32_t> fv(g.cell_count());
  for (CellIndex i = 0; i < g.cell_count(); ++i) fv[i] = vac[i] ? kNeverVisited : 0;
  return OccupancyGrid(g, 0, std::move(fv));
}

bool same_partition(const std::vector<int>& ref, const VacantComponents& c) {
  std::map<int, std::uint32_t> fwd;
  std::map<std::uint32_t, int> back;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    if (ref[i] < 0) {
      if (c.label[i] != kNoComponent) return false;
      continue;
    }
    if (c.label[i] == kNoComponent) return false;
    auto [f, fnew] = fwd.emplace(ref[i], c.label[i]);
    auto [b, bnew] = back.emplace(c.label[i], ref[i]);
    if (f->second != c.label[i] || b->second != ref[i]) return false;
  }
  return fwd.size() == c.count();
}

}  // namespace

TEST_SUITE("vacancy") {
  TEST_CASE("kernels agree with brute force on random small masks") {
    CounterRng rng(2024, 1);
    for (int rep = 0; rep < 120; ++rep) {
      const int N = 4 + static_cast<int>(rng.below(5));
      const TorusGeometry g(3, N);
      const auto vac = random_mask(g, rng, 0.3 + 0.65 * rng.uniform());
      const double K = 0.5 + rng.uniform();
      const double beta = 0.3 + 0.6 * rng.uniform();
      CAPTURE(N);
      CAPTURE(K);
      CAPTURE(beta);
      const int l = log_length(K, N);
      if (l + static_cast<int>(std::floor(std::pow(N, beta) + 1e-12)) + 1 <= N)
        CHECK(detect_V_mask(g, vac, K, beta).holds == brute::V(g, vac, K, beta));
      CHECK(detect_U_mask(g, vac, K, false).holds == brute::U(g, vac, K));
      CHECK(detect_U_mask(g, vac, K, true).holds == brute::U(g, vac, K));
      if (2 * l + 1 <= N) {
        PlanarConnector conn(g, l);
        for (CellIndex x = 0; x < g.cell_count(); x += 7) CHECK(conn(vac, x) == brute::C(g, vac, K, x));
      }
      const auto grid = grid_from_mask(g, vac);
      CHECK(same_partition(brute::labels(g, vac), vacant_components(grid, 0)));
      if (std::count(vac.begin(), vac.end(), 0) > 0) {
        CHECK(largest_vacant_ball_mask(g, vac, false) == brute::ball(g, vac));
        CHECK(largest_vacant_ball_mask(g, vac, true) == brute::ball(g, vac));
      }
    }
  }

  TEST_CASE("vacancy mask and fraction follow first-visit times") {
    const TorusGeometry g(3, 6);
    const auto grid = run_walk(WalkConfig{g, 1.0, std::nullopt, 4, 0});
    for (std::uint64_t t : std::initializer_list<std::uint64_t>{0, 10, 100, grid.total_steps()}) {
      const auto m = vacancy_mask(grid, t, false);
      CHECK(m == vacancy_mask(grid, t, true));
      std::uint64_t vac = 0;
      for (CellIndex i = 0; i < g.cell_count(); ++i) {
        CHECK((m[i] != 0) == (grid.first_visit(i) > t));
        vac += m[i];
      }
      CHECK(vacant_fraction(grid, t) == doctest::Approx(static_cast<double>(vac) / g.cell_count()));
    }
    CHECK(vacant_fraction(grid, 0) == doctest::Approx(1.0 - 1.0 / 216));
  }

  TEST_CASE("longest run counts cells, whole lines give N") {
    const TorusGeometry g(3, 5);
    std::vector<std::uint8_t> vac(g.cell_count(), 0);
    for (int k = 0; k < 3; ++k) vac[TorusPoint(g, {1, 2, k}).index(g)] = 1;
    CHECK(longest_vacant_run(grid_from_mask(g, vac), 0) == 3);
    // Run across the wrap: positions 4, 0, 1 on axis 0.
    vac.assign(g.cell_count(), 0);
    for (int k : {4, 0, 1}) vac[TorusPoint(g, {k, 3, 3}).index(g)] = 1;
    CHECK(longest_vacant_run(grid_from_mask(g, vac), 0) == 3);
    vac.assign(g.cell_count(), 0);
    for (int k = 0; k < 5; ++k) vac[TorusPoint(g, {0, 0, k}).index(g)] = 1;
    CHECK(longest_vacant_run(grid_from_mask(g, vac), 0) == 5);
  }

  TEST_CASE("V preconditions and monotonicity") {
    const TorusGeometry g(3, 8);
    std::vector<std::uint8_t> vac(g.cell_count(), 1);
    CHECK_THROWS_AS(detect_V_mask(g, vac, 3.0, 0.9), ConfigError);
    CounterRng rng(5, 5);
    for (int rep = 0; rep < 30; ++rep) {
      vac = random_mask(g, rng, 0.8);
      const bool lo = detect_V_mask(g, vac, 0.5, 0.4).holds;
      const bool hi_beta = detect_V_mask(g, vac, 0.5, 0.8).holds;
      const bool lo_K = detect_V_mask(g, vac, 0.2, 0.4).holds;
      if (lo) CHECK(hi_beta);
      if (lo) CHECK(lo_K);
    }
  }

  TEST_CASE("all-vacant grid: G holds with the whole torus as giant") {
    const TorusGeometry g(3, 10);
    const OccupancyGrid grid(g, 0);
    const auto probes = probe_lattice(g, 3);
    const EventReport ev = detect_G(grid, 0, 1.0, 0.5, probes);
    CHECK(ev.V.holds);
    CHECK(ev.U.holds);
    CHECK(ev.G);
    CHECK(ev.giant_fraction == doctest::Approx(1.0));
    CHECK(ev.C_fraction == doctest::Approx(1.0));
    CHECK(ev.C_outside_giant == 0);
  }

  TEST_CASE("G implies V and U on walk grids") {
    const TorusGeometry g(4, 12);
    const auto grid = run_walk(WalkConfig{g, 1.0, std::nullopt, 8, 0});
    const auto probes = probe_lattice(g, 3);
    for (double u : {0.05, 0.2, 0.5, 1.0}) {
      const EventReport ev = detect_G(grid, WalkConfig::steps_for(g, u), 0.5, 0.5, probes);
      if (ev.G) {
        CHECK(ev.V.holds);
        CHECK(ev.U.holds);
        CHECK(ev.C_outside_giant == 0);
        CHECK(ev.giant_fraction <= ev.largest_fraction + 1e-12);
      }
    }
  }

  TEST_CASE("U witness is a plane with two large components") {
    const TorusGeometry g(3, 9);
    std::vector<std::uint8_t> vac(g.cell_count(), 0);
    // Two parallel vacant lines in the plane x2 = 0, separated by visited lines.
    for (int k = 0; k < 9; ++k) {
      vac[TorusPoint(g, {0, k, 0}).index(g)] = 1;
      vac[TorusPoint(g, {4, k, 0}).index(g)] = 1;
    }
    const UReport u = detect_U_mask(g, vac, 1.0);
    CHECK_FALSE(u.holds);
    REQUIRE(u.witness.has_value());
    CHECK(u.witness_count == 2);
    CHECK(brute::U(g, vac, 1.0) == false);
  }

  TEST_CASE("largest ball") {
    const TorusGeometry g(3, 9);
    std::vector<std::uint8_t> vac(g.cell_count(), 1);
    vac[0] = 0;
    CHECK(largest_vacant_ball_mask(g, vac) == 3);
    std::vector<std::uint8_t> none(g.cell_count(), 0);
    CHECK(largest_vacant_ball_mask(g, none) == 0);
    CHECK_THROWS_AS(largest_vacant_ball_mask(g, std::vector<std::uint8_t>(g.cell_count(), 1)), GeometryError);
  }

  TEST_CASE("phi0 average equals the vacant fraction") {
    const TorusGeometry g(3, 7);
    const auto grid = run_walk(WalkConfig{g, 0.8, std::nullopt, 2, 0});
    LocalFunctionSpec s;
    s.kind = LocalKind::phi0;
    s.L = 0;
    for (std::uint64_t t : std::initializer_list<std::uint64_t>{0, 50, grid.total_steps()})
      CHECK(gamma_average(grid, s, t) == doctest::Approx(vacant_fraction(grid, t)));
  }

  TEST_CASE("local function tables are validated") {
    const TorusGeometry g(3, 7);
    LocalFunctionSpec s;
    s.kind = LocalKind::table;
    s.L = 0;
    s.table = {1.0, 0.0};
    CHECK_NOTHROW(s.validate(g));
    s.table = {0.0, 1.0};
    CHECK_THROWS_AS(s.validate(g), ConfigError);
    s.table = {1.0};
    CHECK_THROWS_AS(s.validate(g), ConfigError);
    s.L = 4;
    CHECK_THROWS_AS(s.validate(g), ConfigError);
  }

  TEST_CASE("coverage of a single point matches one minus the vacant fraction") {
    const TorusGeometry g(3, 6);
    const std::vector<TorusPoint> A{TorusPoint(g, {0, 0, 0})};
    const auto grid = run_walk(WalkConfig{g, 0.5, std::nullopt, 3, 0});
    CHECK(covered_translate_fraction(grid, grid.total_steps(), A) ==
          doctest::Approx(1.0 - vacant_fraction(grid, grid.total_steps())));
    const std::vector<TorusPoint> bent{TorusPoint(g, {0, 0, 0}), TorusPoint(g, {1, 1, 1})};
    CHECK_FALSE(is_planar(g, bent));
    CHECK_THROWS(coverage_probability(g, bent, 0.5, 4, 1));
  }

  TEST_CASE("validation suite passes, and catches an off-by-one in V") {
    const auto good = run_validation(ValidateKernels::library(), 200, 1);
    CHECK(good.cases >= 200);
    CHECK(good.failures.empty());

    ValidateKernels bad = ValidateKernels::library();
    // Window one offset too wide.
    bad.detect_V = [](const TorusGeometry& g, std::span<const std::uint8_t> v, double K, double beta) {
      VReport r;
      const int l = log_length(K, g.side());
      const int M = brute::offsets(g.side(), beta) + 1;
      r.holds = true;
      for (CellIndex x = 0; x < g.cell_count() && r.holds; ++x)
        for (int j = 0; j < g.dim() && r.holds; ++j) {
          bool ok = false;
          for (int m = 0; m < M && !ok; ++m) {
            ok = true;
            for (int k = 0; k <= l; ++k) {
              Coords c = g.coords(x);
              c[static_cast<std::size_t>(j)] += m + k;
              ok = ok && v[brute::at(g, c)];
            }
          }
          r.holds = ok;
        }
      return r;
    };
    const auto rep = run_validation(bad, 200, 1);
    REQUIRE_FALSE(rep.failures.empty());
    CHECK(std::any_of(rep.failures.begin(), rep.failures.end(),
                      [](const std::string& f) { return f.rfind("V matches brute force", 0) == 0; }));
  }
}
