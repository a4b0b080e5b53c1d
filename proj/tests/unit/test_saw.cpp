#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "doctest.h"
#include "torvac/saw.hpp"

using namespace torvac;

namespace {

std::uint64_t count_paths(std::vector<std::pair<int, int>>& path, int remaining) {
  if (remaining == 0) return 1;
  std::uint64_t total = 0;
  const auto [x, y] = path.back();
  for (int dx = -1; dx <= 1; ++dx)
    for (int dy = -1; dy <= 1; ++dy) {
      if (dx == 0 && dy == 0) continue;
      const std::pair<int, int> nxt{x + dx, y + dy};
      bool used = false;
      for (const auto& p : path) used = used || p == nxt;
      if (used) continue;
      path.push_back(nxt);
      total += count_paths(path, remaining - 1);
      path.pop_back();
    }
  return total;
}

}  // namespace

TEST_SUITE("saw") {
  TEST_CASE("counts agree with a plain enumeration") {
    for (int n = 1; n <= 7; ++n) {
      std::vector<std::pair<int, int>> path{{0, 0}};
      const auto expect = count_paths(path, n);
      CHECK(star_saw_count(n) == expect);
      CHECK(star_saw_count_reference(n) == expect);
    }
  }

  TEST_CASE("first values and the 8 7^(n-1) bound") {
    CHECK(star_saw_count(1) == 8);
    CHECK(star_saw_count(2) == 56);
    for (int n = 1; n <= 10; ++n) CHECK(static_cast<double>(star_saw_count(n)) <= 8.0 * std::pow(7.0, n - 1));
  }

  TEST_CASE("range is enforced") {
    CHECK_THROWS(star_saw_count(0));
    CHECK_THROWS(star_saw_count(kMaxStarSawLength + 1));
  }
}
