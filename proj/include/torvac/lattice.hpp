#pragma once

// Geometry of the discrete torus (Z/NZ)^d and of Z^d: points, wrap-around
// moves, sup-norm balls and spheres, axis lines and coordinate planes.
//
// Cell indexing is row-major with the LAST coordinate fastest:
//   index(x) = sum_j x_j * N^(d-1-j).
// Grid files rely on this order.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace torvac {

inline constexpr int kMaxDim = 8;

using CellIndex = std::uint32_t;
using Coords = std::array<int, kMaxDim>;

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class TorusGeometry {
 public:
  TorusGeometry(int d, int side);

  int dim() const { return d_; }
  int side() const { return n_; }
  CellIndex cell_count() const { return cells_; }
  CellIndex stride(int j) const { return strides_[static_cast<std::size_t>(j)]; }

  int wrap(long long v) const {
    long long r = v % n_;
    return static_cast<int>(r < 0 ? r + n_ : r);
  }
  int circular_distance(int a, int b) const {
    int diff = a - b;
    if (diff < 0) diff = -diff;
    diff %= n_;
    return diff < n_ - diff ? diff : n_ - diff;
  }

  // Coordinates must already be reduced into [0, N).
  CellIndex index(const Coords& c) const {
    CellIndex idx = 0;
    for (int j = 0; j < d_; ++j) idx = idx * static_cast<CellIndex>(n_) + static_cast<CellIndex>(c[static_cast<std::size_t>(j)]);
    return idx;
  }
  Coords coords(CellIndex idx) const;

  // Neighbor of a cell along axis j, sign +1 or -1, by index arithmetic.
  CellIndex neighbor(CellIndex idx, int j, int sign) const {
    const CellIndex s = strides_[static_cast<std::size_t>(j)];
    const int c = static_cast<int>((idx / s) % static_cast<CellIndex>(n_));
    if (sign > 0) return c == n_ - 1 ? idx - s * static_cast<CellIndex>(n_ - 1) : idx + s;
    return c == 0 ? idx + s * static_cast<CellIndex>(n_ - 1) : idx - s;
  }

  friend bool operator==(const TorusGeometry& a, const TorusGeometry& b) {
    return a.d_ == b.d_ && a.n_ == b.n_;
  }

 private:
  int d_;
  int n_;
  CellIndex cells_;
  std::array<CellIndex, kMaxDim> strides_{};
};

class TorusPoint {
 public:
  TorusPoint() = default;
  TorusPoint(const TorusGeometry& g, std::span<const int> coords);
  TorusPoint(const TorusGeometry& g, std::initializer_list<int> coords)
      : TorusPoint(g, std::span<const int>(coords.begin(), coords.size())) {}
  static TorusPoint from_index(const TorusGeometry& g, CellIndex idx);
  static TorusPoint from_coords(const TorusGeometry& g, const Coords& c);

  int dim() const { return d_; }
  int operator[](int j) const { return c_[static_cast<std::size_t>(j)]; }
  const Coords& coords() const { return c_; }
  CellIndex index(const TorusGeometry& g) const { return g.index(c_); }

  friend bool operator==(const TorusPoint&, const TorusPoint&) = default;

 private:
  Coords c_{};
  int d_ = 0;
};

std::string to_string(const TorusPoint& p);

TorusPoint step(const TorusGeometry& g, const TorusPoint& p, int direction, int sign);
int linf_dist(const TorusGeometry& g, const TorusPoint& p, const TorusPoint& q);
int linf_dist(const TorusGeometry& g, const Coords& p, const Coords& q);

struct LinfBox {
  TorusPoint center;
  int radius = 0;
};

// Throws GeometryError unless 2*radius + 1 <= N.
LinfBox make_box(const TorusGeometry& g, const TorusPoint& center, int radius);
bool box_contains(const TorusGeometry& g, const LinfBox& box, const Coords& c);
bool box_contains(const TorusGeometry& g, const LinfBox& outer, const LinfBox& inner);

std::vector<TorusPoint> ball(const TorusGeometry& g, const TorusPoint& center, int radius);
std::vector<CellIndex> ball_cells(const TorusGeometry& g, const TorusPoint& center, int radius);

// Z^dim helpers. dim may be 1..kMaxDim.
int zd_linf_norm(const Coords& x, int dim);
int zd_linf_dist(const Coords& x, const Coords& y, int dim);
std::vector<Coords> zd_ball(int dim, const Coords& center, int radius);
std::vector<Coords> zd_sphere(int dim, int radius);  // |x|_inf == radius, centered at 0
bool zd_adjacent(const Coords& x, const Coords& y, int dim);

class AxisLine {
 public:
  AxisLine(const TorusGeometry& g, const TorusPoint& through, int direction);
  const TorusPoint& base() const { return base_; }
  int direction() const { return dir_; }
  std::vector<CellIndex> cells(const TorusGeometry& g) const;
  friend bool operator==(const AxisLine&, const AxisLine&) = default;

 private:
  TorusPoint base_;
  int dir_;
};

class CoordinatePlane {
 public:
  CoordinatePlane(const TorusGeometry& g, const TorusPoint& through, int a, int b);
  const TorusPoint& base() const { return base_; }
  int first_axis() const { return a_; }
  int second_axis() const { return b_; }
  bool contains(const TorusPoint& p) const;
  // Cells in row-major (first_axis, second_axis) order.
  std::vector<CellIndex> cells(const TorusGeometry& g) const;
  friend bool operator==(const CoordinatePlane&, const CoordinatePlane&) = default;

 private:
  TorusPoint base_;
  int a_;
  int b_;
};

std::vector<AxisLine> enumerate_lines(const TorusGeometry& g);
std::vector<CoordinatePlane> enumerate_planes(const TorusGeometry& g);
std::uint64_t plane_count(const TorusGeometry& g);

// Length of the shortest circular window of [0, N) covering every marked
// position, minus one. Empty input gives 0; a full circle gives N - 1.
int circular_extent(std::span<const std::uint8_t> occupied);

// Diameter of an in-plane set: max over the two plane axes of circular_extent.
int plane_diameter(const TorusGeometry& g, const CoordinatePlane& plane,
                   std::span<const TorusPoint> cells);

// floor(K * ln N); natural logarithm throughout.
int log_length(double K, int N);

}  // namespace torvac
