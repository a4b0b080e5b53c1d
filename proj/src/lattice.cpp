#include "torvac/lattice.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace torvac {

TorusGeometry::TorusGeometry(int d, int side) : d_(d), n_(side), cells_(0) {
  if (d < 3 || d > kMaxDim)
    throw GeometryError("torus dimension must lie in [3, " + std::to_string(kMaxDim) + "], got " +
                        std::to_string(d));
  if (side < 2) throw GeometryError("torus side must be >= 2, got " + std::to_string(side));
  // One index value is reserved as a sentinel.
  constexpr std::uint64_t kLimit = std::numeric_limits<CellIndex>::max() - 1ULL;
  std::uint64_t count = 1;
  for (int j = 0; j < d; ++j) {
    count *= static_cast<std::uint64_t>(side);
    if (count > kLimit)
      throw GeometryError("cell count N^d exceeds the 32-bit cell index width");
  }
  cells_ = static_cast<CellIndex>(count);
  CellIndex s = 1;
  for (int j = d - 1; j >= 0; --j) {
    strides_[static_cast<std::size_t>(j)] = s;
    s *= static_cast<CellIndex>(side);
  }
}

Coords TorusGeometry::coords(CellIndex idx) const {
  Coords c{};
  for (int j = d_ - 1; j >= 0; --j) {
    c[static_cast<std::size_t>(j)] = static_cast<int>(idx % static_cast<CellIndex>(n_));
    idx /= static_cast<CellIndex>(n_);
  }
  return c;
}

TorusPoint::TorusPoint(const TorusGeometry& g, std::span<const int> coords) : d_(g.dim()) {
  if (static_cast<int>(coords.size()) != g.dim())
    throw GeometryError("point has " + std::to_string(coords.size()) + " coordinates, torus has d=" +
                        std::to_string(g.dim()));
  for (int j = 0; j < d_; ++j) c_[static_cast<std::size_t>(j)] = g.wrap(coords[static_cast<std::size_t>(j)]);
}

TorusPoint TorusPoint::from_index(const TorusGeometry& g, CellIndex idx) {
  if (idx >= g.cell_count()) throw GeometryError("cell index out of range");
  return from_coords(g, g.coords(idx));
}

TorusPoint TorusPoint::from_coords(const TorusGeometry& g, const Coords& c) {
  return TorusPoint(g, std::span<const int>(c.data(), static_cast<std::size_t>(g.dim())));
}

std::string to_string(const TorusPoint& p) {
  std::ostringstream os;
  os << '(';
  for (int j = 0; j < p.dim(); ++j) os << (j ? "," : "") << p[j];
  os << ')';
  return os.str();
}

TorusPoint step(const TorusGeometry& g, const TorusPoint& p, int direction, int sign) {
  if (direction < 0 || direction >= g.dim())
    throw GeometryError("step direction " + std::to_string(direction) + " out of range");
  if (sign != 1 && sign != -1) throw GeometryError("step sign must be +1 or -1");
  Coords c = p.coords();
  c[static_cast<std::size_t>(direction)] += sign;
  return TorusPoint::from_coords(g, c);
}

int linf_dist(const TorusGeometry& g, const Coords& p, const Coords& q) {
  int m = 0;
  for (int j = 0; j < g.dim(); ++j)
    m = std::max(m, g.circular_distance(p[static_cast<std::size_t>(j)], q[static_cast<std::size_t>(j)]));
  return m;
}

int linf_dist(const TorusGeometry& g, const TorusPoint& p, const TorusPoint& q) {
  return linf_dist(g, p.coords(), q.coords());
}

LinfBox make_box(const TorusGeometry& g, const TorusPoint& center, int radius) {
  if (radius < 0) throw GeometryError("box radius must be >= 0");
  if (2 * radius + 1 > g.side())
    throw GeometryError("box radius " + std::to_string(radius) + " overlaps itself on a torus of side " +
                        std::to_string(g.side()));
  return LinfBox{center, radius};
}

bool box_contains(const TorusGeometry& g, const LinfBox& box, const Coords& c) {
  for (int j = 0; j < g.dim(); ++j)
    if (g.circular_distance(c[static_cast<std::size_t>(j)], box.center[j]) > box.radius) return false;
  return true;
}

bool box_contains(const TorusGeometry& g, const LinfBox& outer, const LinfBox& inner) {
  return linf_dist(g, outer.center, inner.center) + inner.radius <= outer.radius;
}

namespace {

// Visits every offset in [-radius, radius]^dim.
template <class F>
void for_each_offset(int dim, int radius, F&& f) {
  Coords off{};
  for (int j = 0; j < dim; ++j) off[static_cast<std::size_t>(j)] = -radius;
  while (true) {
    f(off);
    int j = dim - 1;
    while (j >= 0 && off[static_cast<std::size_t>(j)] == radius) {
      off[static_cast<std::size_t>(j)] = -radius;
      --j;
    }
    if (j < 0) return;
    ++off[static_cast<std::size_t>(j)];
  }
}

}  // namespace

std::vector<TorusPoint> ball(const TorusGeometry& g, const TorusPoint& center, int radius) {
  make_box(g, center, radius);
  std::vector<TorusPoint> out;
  for_each_offset(g.dim(), radius, [&](const Coords& off) {
    Coords c = center.coords();
    for (int j = 0; j < g.dim(); ++j) c[static_cast<std::size_t>(j)] += off[static_cast<std::size_t>(j)];
    out.push_back(TorusPoint::from_coords(g, c));
  });
  return out;
}

std::vector<CellIndex> ball_cells(const TorusGeometry& g, const TorusPoint& center, int radius) {
  std::vector<CellIndex> out;
  for (const auto& p : ball(g, center, radius)) out.push_back(p.index(g));
  return out;
}

int zd_linf_norm(const Coords& x, int dim) {
  int m = 0;
  for (int j = 0; j < dim; ++j) m = std::max(m, std::abs(x[static_cast<std::size_t>(j)]));
  return m;
}

int zd_linf_dist(const Coords& x, const Coords& y, int dim) {
  int m = 0;
  for (int j = 0; j < dim; ++j)
    m = std::max(m, std::abs(x[static_cast<std::size_t>(j)] - y[static_cast<std::size_t>(j)]));
  return m;
}

std::vector<Coords> zd_ball(int dim, const Coords& center, int radius) {
  if (dim < 1 || dim > kMaxDim) throw GeometryError("dimension out of range");
  if (radius < 0) throw GeometryError("ball radius must be >= 0");
  std::vector<Coords> out;
  for_each_offset(dim, radius, [&](const Coords& off) {
    Coords c = center;
    for (int j = 0; j < dim; ++j) c[static_cast<std::size_t>(j)] += off[static_cast<std::size_t>(j)];
    out.push_back(c);
  });
  return out;
}

std::vector<Coords> zd_sphere(int dim, int radius) {
  std::vector<Coords> out;
  for (const auto& c : zd_ball(dim, Coords{}, radius))
    if (zd_linf_norm(c, dim) == radius) out.push_back(c);
  return out;
}

bool zd_adjacent(const Coords& x, const Coords& y, int dim) {
  int l1 = 0;
  for (int j = 0; j < dim; ++j) l1 += std::abs(x[static_cast<std::size_t>(j)] - y[static_cast<std::size_t>(j)]);
  return l1 == 1;
}

AxisLine::AxisLine(const TorusGeometry& g, const TorusPoint& through, int direction) : dir_(direction) {
  if (direction < 0 || direction >= g.dim()) throw GeometryError("line direction out of range");
  Coords c = through.coords();
  c[static_cast<std::size_t>(direction)] = 0;
  base_ = TorusPoint::from_coords(g, c);
}

std::vector<CellIndex> AxisLine::cells(const TorusGeometry& g) const {
  std::vector<CellIndex> out;
  out.reserve(static_cast<std::size_t>(g.side()));
  const CellIndex b = base_.index(g);
  for (int k = 0; k < g.side(); ++k) out.push_back(b + static_cast<CellIndex>(k) * g.stride(dir_));
  return out;
}

CoordinatePlane::CoordinatePlane(const TorusGeometry& g, const TorusPoint& through, int a, int b) {
  if (a == b || a < 0 || b < 0 || a >= g.dim() || b >= g.dim())
    throw GeometryError("plane needs two distinct axes in range");
  a_ = std::min(a, b);
  b_ = std::max(a, b);
  Coords c = through.coords();
  c[static_cast<std::size_t>(a_)] = 0;
  c[static_cast<std::size_t>(b_)] = 0;
  base_ = TorusPoint::from_coords(g, c);
}

bool CoordinatePlane::contains(const TorusPoint& p) const {
  for (int j = 0; j < p.dim(); ++j)
    if (j != a_ && j != b_ && p[j] != base_[j]) return false;
  return true;
}

std::vector<CellIndex> CoordinatePlane::cells(const TorusGeometry& g) const {
  std::vector<CellIndex> out;
  out.reserve(static_cast<std::size_t>(g.side()) * static_cast<std::size_t>(g.side()));
  const CellIndex b = base_.index(g);
  for (int i = 0; i < g.side(); ++i)
    for (int k = 0; k < g.side(); ++k)
      out.push_back(b + static_cast<CellIndex>(i) * g.stride(a_) + static_cast<CellIndex>(k) * g.stride(b_));
  return out;
}

std::vector<AxisLine> enumerate_lines(const TorusGeometry& g) {
  std::vector<AxisLine> out;
  for (int j = 0; j < g.dim(); ++j)
    for (CellIndex idx = 0; idx < g.cell_count(); ++idx) {
      const Coords c = g.coords(idx);
      if (c[static_cast<std::size_t>(j)] == 0) out.emplace_back(g, TorusPoint::from_coords(g, c), j);
    }
  return out;
}

std::vector<CoordinatePlane> enumerate_planes(const TorusGeometry& g) {
  std::vector<CoordinatePlane> out;
  for (int a = 0; a < g.dim(); ++a)
    for (int b = a + 1; b < g.dim(); ++b)
      for (CellIndex idx = 0; idx < g.cell_count(); ++idx) {
        const Coords c = g.coords(idx);
        if (c[static_cast<std::size_t>(a)] == 0 && c[static_cast<std::size_t>(b)] == 0)
          out.emplace_back(g, TorusPoint::from_coords(g, c), a, b);
      }
  return out;
}

std::uint64_t plane_count(const TorusGeometry& g) {
  std::uint64_t n = static_cast<std::uint64_t>(g.dim()) * static_cast<std::uint64_t>(g.dim() - 1) / 2;
  for (int j = 0; j < g.dim() - 2; ++j) n *= static_cast<std::uint64_t>(g.side());
  return n;
}

int circular_extent(std::span<const std::uint8_t> occupied) {
  const int n = static_cast<int>(occupied.size());
  int first = -1;
  for (int i = 0; i < n; ++i)
    if (occupied[static_cast<std::size_t>(i)]) {
      first = i;
      break;
    }
  if (first < 0) return 0;
  // Largest circular run of unoccupied positions, scanning once around from `first`.
  int largest_gap = 0;
  int gap = 0;
  for (int k = 1; k <= n; ++k) {
    const int i = (first + k) % n;
    if (occupied[static_cast<std::size_t>(i)]) {
      largest_gap = std::max(largest_gap, gap);
      gap = 0;
    } else {
      ++gap;
    }
  }
  return n - largest_gap - 1;
}

int plane_diameter(const TorusGeometry& g, const CoordinatePlane& plane, std::span<const TorusPoint> cells) {
  if (cells.empty()) return 0;
  std::vector<std::uint8_t> on_a(static_cast<std::size_t>(g.side()), 0);
  std::vector<std::uint8_t> on_b(static_cast<std::size_t>(g.side()), 0);
  for (const auto& p : cells) {
    if (!plane.contains(p)) throw GeometryError("cell " + to_string(p) + " is not in the plane");
    on_a[static_cast<std::size_t>(p[plane.first_axis()])] = 1;
    on_b[static_cast<std::size_t>(p[plane.second_axis()])] = 1;
  }
  return std::max(circular_extent(on_a), circular_extent(on_b));
}

int log_length(double K, int N) {
  if (K < 0) throw GeometryError("K must be >= 0");
  return static_cast<int>(std::floor(K * std::log(static_cast<double>(N))));
}

}  // namespace torvac
