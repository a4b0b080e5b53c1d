#include "torvac/saw.hpp"

#include <array>
#include <stdexcept>
#include <vector>

namespace torvac {

namespace {

constexpr int kSide = 2 * kMaxStarSawLength + 1;
constexpr std::array<int, 8> kDx = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr std::array<int, 8> kDy = {0, 1, 1, 1, 0, -1, -1, -1};

struct Board {
  std::array<std::uint8_t, kSide * kSide> used{};
  static int cell(int x, int y) { return (y + kMaxStarSawLength) * kSide + (x + kMaxStarSawLength); }
};

std::uint64_t extend(Board& b, int x, int y, int left) {
  if (left == 0) return 1;
  std::uint64_t total = 0;
  for (int k = 0; k < 8; ++k) {
    const int nx = x + kDx[k], ny = y + kDy[k];
    const int c = Board::cell(nx, ny);
    if (b.used[c]) continue;
    b.used[c] = 1;
    total += extend(b, nx, ny, left - 1);
    b.used[c] = 0;
  }
  return total;
}

void check_length(int n) {
  if (n < 1 || n > kMaxStarSawLength) throw std::invalid_argument("star SAW length must be in [1, 12]");
}

// Position classes relative to a symmetry line through the origin:
// 0 on the line, >0 on the counted side, <0 on the mirrored side.
int side_of(int x, int y, bool diagonal) { return diagonal ? x - y : y; }

// Paths whose points so far all lie on the line: a step off the line to the
// counted side stands for itself and its mirror image.
std::uint64_t extend_on_line(Board& b, int x, int y, int left, bool diagonal) {
  if (left == 0) return 1;
  std::uint64_t total = 0;
  for (int k = 0; k < 8; ++k) {
    const int nx = x + kDx[k], ny = y + kDy[k];
    const int s = side_of(nx, ny, diagonal);
    if (s < 0) continue;
    const int c = Board::cell(nx, ny);
    if (b.used[c]) continue;
    b.used[c] = 1;
    total += s == 0 ? extend_on_line(b, nx, ny, left - 1, diagonal) : 2 * extend(b, nx, ny, left - 1);
    b.used[c] = 0;
  }
  return total;
}

struct Task {
  int x1, y1, x2, y2;
  bool diagonal;
  std::uint64_t weight;
};

}  // namespace

std::uint64_t star_saw_count_reference(int n) {
  check_length(n);
  Board b;
  b.used[Board::cell(0, 0)] = 1;
  return extend(b, 0, 0, n);
}

std::uint64_t star_saw_count(int n) {
  check_length(n);
  if (n == 1) return 8;
  // First step (1,0) or (1,1), each standing for four rotations. Second steps
  // are split into tasks; those leaving the line carry the mirror factor.
  std::vector<Task> tasks;
  for (const bool diagonal : {false, true}) {
    const int x1 = 1, y1 = diagonal ? 1 : 0;
    for (int k = 0; k < 8; ++k) {
      const int x2 = x1 + kDx[k], y2 = y1 + kDy[k];
      if (x2 == 0 && y2 == 0) continue;
      const int s = side_of(x2, y2, diagonal);
      if (s < 0) continue;
      tasks.push_back({x1, y1, x2, y2, diagonal, s == 0 ? 4u : 8u});
    }
  }
  std::vector<std::uint64_t> counts(tasks.size(), 0);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(tasks.size()); ++i) {
    const Task& t = tasks[static_cast<std::size_t>(i)];
    Board b;
    b.used[Board::cell(0, 0)] = 1;
    b.used[Board::cell(t.x1, t.y1)] = 1;
    b.used[Board::cell(t.x2, t.y2)] = 1;
    const bool on_line = side_of(t.x2, t.y2, t.diagonal) == 0;
    const std::uint64_t c = on_line ? extend_on_line(b, t.x2, t.y2, n - 2, t.diagonal) : extend(b, t.x2, t.y2, n - 2);
    counts[static_cast<std::size_t>(i)] = t.weight * c;
  }
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  return total;
}

}  // namespace torvac
