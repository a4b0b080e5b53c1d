#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "torvac/walk.hpp"

using namespace torvac;

namespace {

struct DirectionCounter {
  const TorusGeometry* g;
  std::optional<Coords> prev;
  std::array<std::uint64_t, 6> counts{};
  void observe(std::uint64_t, const WalkerState& s) {
    if (prev) {
      for (int j = 0; j < 3; ++j) {
        const int a = (*prev)[static_cast<std::size_t>(j)], b = s.coords()[static_cast<std::size_t>(j)];
        if (a == b) continue;
        const bool plus = b == g->wrap(a + 1);
        ++counts[static_cast<std::size_t>(2 * j + (plus ? 1 : 0))];
      }
    }
    prev = s.coords();
  }
};

double chi_square(std::span<const std::uint64_t> counts) {
  double total = 0;
  for (auto c : counts) total += static_cast<double>(c);
  const double e = total / static_cast<double>(counts.size());
  double chi = 0;
  for (auto c : counts) chi += (static_cast<double>(c) - e) * (static_cast<double>(c) - e) / e;
  return chi;
}

std::filesystem::path temp_file(const char* name) { return std::filesystem::temp_directory_path() / name; }

}  // namespace

TEST_SUITE("walk") {
  TEST_CASE("step count is floor(u N^d) and out-of-range u is rejected") {
    const TorusGeometry g(3, 10);
    CHECK(WalkConfig::steps_for(g, 0.0) == 0);
    CHECK(WalkConfig::steps_for(g, 1.5) == 1500);
    CHECK(WalkConfig::steps_for(g, 0.0015) == 1);
    CHECK_THROWS_AS(WalkConfig::steps_for(g, -1.0), ConfigError);
    CHECK_THROWS_AS(WalkConfig::steps_for(TorusGeometry(3, 1000), 5.0), ConfigError);
  }

  TEST_CASE("first-visit times are consistent with the path") {
    const TorusGeometry g(3, 7);
    const WalkConfig wc{g, 2.0, std::nullopt, 11, 3};
    PathRecorder rec;
    const OccupancyGrid grid = run_walk(wc, rec);
    const auto& path = rec.path();
    REQUIRE(path.size() == grid.total_steps() + 1);
    std::vector<std::uint32_t> fv(g.cell_count(), kNeverVisited);
    for (std::size_t t = 0; t < path.size(); ++t) {
      if (fv[path[t]] == kNeverVisited) fv[path[t]] = static_cast<std::uint32_t>(t);
      if (t > 0) CHECK(linf_dist(g, g.coords(path[t]), g.coords(path[t - 1])) == 1);
    }
    CHECK(std::equal(fv.begin(), fv.end(), grid.first_visit().begin()));
    std::uint64_t visited = 0;
    for (auto v : fv) visited += v <= 100 ? 1 : 0;
    CHECK(grid.visited_count(100) == visited);
  }

  TEST_CASE("same config, same walk; other replica, other walk") {
    const TorusGeometry g(3, 8);
    const WalkConfig a{g, 1.0, std::nullopt, 5, 0}, b{g, 1.0, std::nullopt, 5, 1};
    const auto ga = run_walk(a), ga2 = run_walk(a), gb = run_walk(b);
    CHECK(std::equal(ga.first_visit().begin(), ga.first_visit().end(), ga2.first_visit().begin()));
    CHECK_FALSE(std::equal(ga.first_visit().begin(), ga.first_visit().end(), gb.first_visit().begin()));
  }

  TEST_CASE("step directions are uniform (chi-square, 5 df)") {
    const TorusGeometry g(3, 9);
    DirectionCounter dc{&g, std::nullopt, {}};
    drive_walk(WalkConfig{g, 200.0, std::nullopt, 1, 0}, dc);
    // 99.9% quantile of chi-square with 5 degrees of freedom.
    CHECK(chi_square(dc.counts) < 20.52);
  }

  TEST_CASE("start is uniform over the torus (chi-square, 26 df)") {
    const TorusGeometry g(3, 3);
    std::vector<std::uint64_t> counts(g.cell_count(), 0);
    for (std::uint64_t i = 0; i < 5400; ++i) {
      const WalkConfig wc{g, 0.0, std::nullopt, 9, i};
      CounterRng rng = walk_stream(wc);
      ++counts[draw_start(wc, rng).index(g)];
    }
    // 99.9% quantile of chi-square with 26 degrees of freedom.
    CHECK(chi_square(counts) < 54.05);
  }

  TEST_CASE("hand-traced excursion schedule") {
    const TorusGeometry g(3, 11);
    const TorusPoint c(g, {5, 5, 5});
    const int xs[] = {2, 3, 4, 5, 6, 7, 8, 7, 6, 7, 6, 7, 8};
    std::vector<CellIndex> path;
    for (int x : xs) path.push_back(TorusPoint(g, {x, 5, 5}).index(g));
    const auto s = excursion_schedule(g, path, {make_box(g, c, 1)}, {make_box(g, c, 2)});
    CHECK(s.returns == std::vector<std::uint64_t>{2, 8});
    CHECK(s.departures == std::vector<std::uint64_t>{6, 12});
    CHECK(s.last_visits == std::vector<std::uint64_t>{4, 10});
    CHECK_FALSE(s.open);
    CHECK(s.completed_by(11) == 1);
    CHECK(s.completed_by(12) == 2);
    CHECK(s.returns_by(7) == 1);

    path.pop_back();
    const auto open = excursion_schedule(g, path, {make_box(g, c, 1)}, {make_box(g, c, 2)});
    CHECK(open.open);
    CHECK(open.completed() == 1);
    CHECK(open.returns.size() == 2);
  }

  TEST_CASE("tracker refuses an inner box outside the outer one") {
    const TorusGeometry g(3, 11);
    CHECK_THROWS_AS(ExcursionTracker(g, {make_box(g, TorusPoint(g, {0, 0, 0}), 1)},
                                     {make_box(g, TorusPoint(g, {5, 5, 5}), 2)}),
                    GeometryError);
  }

  TEST_CASE("box excursion counts") {
    const TorusGeometry g(3, 16);
    const TorusPoint x(g, {0, 0, 0});
    const std::vector<double> us{0.0, 0.5, 1.0, 2.0};
    const auto c = count_box_excursions(WalkConfig{g, 2.0, std::nullopt, 3, 0}, x, 1, 4, us);
    CHECK(c.macro_completed[0] == 0);
    CHECK(c.probe_completed[0] == 0);
    CHECK(c.macro_inner_radius == 2);
    CHECK(c.macro_outer_radius == 4);
    for (std::size_t k = 1; k < us.size(); ++k) {
      CHECK(c.probe_completed[k] >= c.probe_completed[k - 1]);
      CHECK(c.probe_returns[k] >= c.probe_completed[k]);
      CHECK(c.probe_returns[k] <= c.probe_completed[k] + 1);
    }
    CHECK_THROWS_AS(count_box_excursions(WalkConfig{g, 1.0, std::nullopt, 3, 0}, x, 5, 4, us), GeometryError);

    // Replaying the recorded path gives the same probe counts.
    PathRecorder rec;
    (void)run_walk(WalkConfig{g, 2.0, std::nullopt, 3, 0}, rec);
    const auto s = excursion_schedule(g, rec.path(), {make_box(g, x, 1)}, {make_box(g, x, 4)});
    for (std::size_t k = 0; k < us.size(); ++k)
      CHECK(s.completed_by(WalkConfig::steps_for(g, us[k])) == c.probe_completed[k]);
  }

  TEST_CASE("grid file round trip and rejection of bad files") {
    const TorusGeometry g(3, 6);
    const auto grid = run_walk(WalkConfig{g, 0.7, std::nullopt, 21, 4});
    const auto path = temp_file("torvac-unit-roundtrip.grid");
    write_grid(path.string(), grid);
    const auto back = read_grid(path.string());
    CHECK(back.geometry() == g);
    CHECK(back.total_steps() == grid.total_steps());
    CHECK(back.seed() == 21);
    CHECK(back.replica_index() == 4);
    CHECK(std::equal(grid.first_visit().begin(), grid.first_visit().end(), back.first_visit().begin()));

    {
      std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
      f.seekp(0);
      f.write("XXXXXXXX", 8);
    }
    CHECK_THROWS_AS(read_grid(path.string()), FormatError);
    write_grid(path.string(), grid);
    std::filesystem::resize_file(path, 20);
    CHECK_THROWS_AS(read_grid(path.string()), FormatError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_grid(path.string()), FormatError);
  }

  TEST_CASE("queries beyond the horizon are rejected") {
    const TorusGeometry g(3, 5);
    const auto grid = run_walk(WalkConfig{g, 0.2, std::nullopt, 1, 0});
    CHECK_NOTHROW(grid.check_time(grid.total_steps()));
    CHECK_THROWS(grid.check_time(grid.total_steps() + 1));
  }
}
