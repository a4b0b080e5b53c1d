#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "torvac/lattice.hpp"

using namespace torvac;

TEST_SUITE("lattice") {
  TEST_CASE("index and coords are inverse, last coordinate fastest") {
    const TorusGeometry g(3, 5);
    CHECK(g.cell_count() == 125);
    for (CellIndex i = 0; i < g.cell_count(); ++i) CHECK(g.index(g.coords(i)) == i);
    Coords c{};
    c[2] = 1;
    CHECK(g.index(c) == 1);
    c = Coords{};
    c[0] = 1;
    CHECK(g.index(c) == 25);
  }

  TEST_CASE("dimension and side are validated") {
    CHECK_THROWS_AS(TorusGeometry(2, 10), GeometryError);
    CHECK_THROWS_AS(TorusGeometry(9, 2), GeometryError);
    CHECK_THROWS_AS(TorusGeometry(3, 1), GeometryError);
  }

  TEST_CASE("neighbor wraps and agrees with coordinate arithmetic") {
    const TorusGeometry g(4, 4);
    for (CellIndex i = 0; i < g.cell_count(); ++i)
      for (int j = 0; j < 4; ++j)
        for (int s : {-1, 1}) {
          Coords c = g.coords(i);
          c[static_cast<std::size_t>(j)] = (c[static_cast<std::size_t>(j)] + s + 4) % 4;
          CHECK(g.neighbor(i, j, s) == g.index(c));
        }
  }

  TEST_CASE("circular distance and sup distance") {
    const TorusGeometry g(3, 10);
    CHECK(g.circular_distance(0, 9) == 1);
    CHECK(g.circular_distance(2, 7) == 5);
    CHECK(g.wrap(-1) == 9);
    CHECK(g.wrap(23) == 3);
    const TorusPoint a(g, {0, 0, 0}), b(g, {9, 5, 2});
    CHECK(linf_dist(g, a, b) == 5);
  }

  TEST_CASE("balls have (2r+1)^d cells and boxes must fit") {
    const TorusGeometry g(3, 9);
    const TorusPoint x(g, {8, 0, 4});
    for (int r = 0; r <= 4; ++r) {
      const auto cells = ball_cells(g, x, r);
      CHECK(cells.size() == static_cast<std::size_t>(std::pow(2 * r + 1, 3)));
      CHECK(std::set<CellIndex>(cells.begin(), cells.end()).size() == cells.size());
      for (CellIndex c : cells) CHECK(linf_dist(g, g.coords(c), x.coords()) <= r);
    }
    CHECK_THROWS_AS(make_box(g, x, 5), GeometryError);
    const LinfBox outer = make_box(g, x, 3), inner = make_box(g, x, 1);
    CHECK(box_contains(g, outer, inner));
    CHECK_FALSE(box_contains(g, inner, outer));
  }

  TEST_CASE("Z^d spheres") {
    for (int d = 1; d <= 4; ++d)
      for (int r = 0; r <= 3; ++r) {
        const auto s = zd_sphere(d, r);
        const double expect = r == 0 ? 1.0 : std::pow(2 * r + 1, d) - std::pow(2 * r - 1, d);
        CHECK(static_cast<double>(s.size()) == expect);
        for (const auto& z : s) CHECK(zd_linf_norm(z, d) == r);
      }
  }

  TEST_CASE("circular extent") {
    std::vector<std::uint8_t> v(10, 0);
    CHECK(circular_extent(v) == 0);
    v[3] = 1;
    CHECK(circular_extent(v) == 0);
    v[5] = 1;
    CHECK(circular_extent(v) == 2);
    v.assign(10, 0);
    v[0] = v[9] = 1;
    CHECK(circular_extent(v) == 1);
    v.assign(10, 1);
    CHECK(circular_extent(v) == 9);
  }

  TEST_CASE("enumerations") {
    const TorusGeometry g(3, 4);
    CHECK(enumerate_lines(g).size() == 3 * 16);
    CHECK(enumerate_planes(g).size() == 3 * 4);
    CHECK(plane_count(g) == 12);
    for (const auto& p : enumerate_planes(g)) CHECK(p.cells(g).size() == 16);
  }

  TEST_CASE("log length is floor(K ln N)") {
    CHECK(log_length(1.0, 40) == 3);
    CHECK(log_length(0.5, 40) == 1);
    CHECK(log_length(2.0, 100) == 9);
    CHECK(log_length(0.0, 100) == 0);
  }
}
