#include "torvac/vacancy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace torvac {

namespace {

// Calls f(base, stride) for every axis line along direction j.
template <class F>
void for_each_line(const TorusGeometry& g, int j, F&& f) {
  const CellIndex s = g.stride(j);
  const CellIndex block = s * static_cast<CellIndex>(g.side());
  const CellIndex outer = g.cell_count() / block;
  for (CellIndex o = 0; o < outer; ++o)
    for (CellIndex i = 0; i < s; ++i) f(o * block + i, s);
}

// Forward circular run lengths: run[i] = consecutive vacant cells from i on (capped at n).
void forward_runs(const std::vector<std::uint8_t>& vac, std::vector<int>& run) {
  const int n = static_cast<int>(vac.size());
  run.assign(static_cast<std::size_t>(n), 0);
  int p = -1;
  for (int i = 0; i < n; ++i)
    if (!vac[static_cast<std::size_t>(i)]) {
      p = i;
      break;
    }
  if (p < 0) {
    std::fill(run.begin(), run.end(), n);
    return;
  }
  for (int k = 1; k < n; ++k) {
    const int i = ((p - k) % n + n) % n;
    const int nxt = (i + 1) % n;
    run[static_cast<std::size_t>(i)] = vac[static_cast<std::size_t>(i)] ? run[static_cast<std::size_t>(nxt)] + 1 : 0;
  }
}

void load_line(std::span<const std::uint8_t> vacant, CellIndex base, CellIndex s, int n, std::vector<std::uint8_t>& out) {
  out.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = vacant[base + static_cast<CellIndex>(k) * s];
}

void check_mask(const TorusGeometry& g, std::span<const std::uint8_t> vacant) {
  if (vacant.size() != g.cell_count()) throw GeometryError("vacancy mask size does not match N^d");
}

// Number of integers m with 0 <= m < N^beta.
int offset_count(int N, double beta) {
  const double p = std::pow(static_cast<double>(N), beta);
  return static_cast<int>(std::ceil(p * (1.0 - 1e-12)));
}

struct PlaneAxes {
  int a;
  int b;
  std::vector<CellIndex> bases;
};

std::vector<PlaneAxes> plane_families(const TorusGeometry& g) {
  std::vector<PlaneAxes> out;
  const auto n = static_cast<CellIndex>(g.side());
  for (int a = 0; a < g.dim(); ++a)
    for (int b = a + 1; b < g.dim(); ++b) {
      PlaneAxes pa{a, b, {}};
      for (CellIndex idx = 0; idx < g.cell_count(); ++idx)
        if ((idx / g.stride(a)) % n == 0 && (idx / g.stride(b)) % n == 0) pa.bases.push_back(idx);
      out.push_back(std::move(pa));
    }
  return out;
}

// Counts in-plane vacant components of circular extent >= threshold, up to `stop`.
class PlaneScanner {
 public:
  explicit PlaneScanner(int n) : n_(n), label_(static_cast<std::size_t>(n) * n), queue_(), proj_a_(n), proj_b_(n) {}

  int count_large(std::span<const std::uint8_t> vacant, CellIndex base, CellIndex sa, CellIndex sb, int threshold,
                  int stop) {
    const int n = n_;
    auto cell = [&](int i, int k) { return base + static_cast<CellIndex>(i) * sa + static_cast<CellIndex>(k) * sb; };
    std::fill(label_.begin(), label_.end(), 0);
    int large = 0;
    for (int start = 0; start < n * n; ++start) {
      if (label_[static_cast<std::size_t>(start)] || !vacant[cell(start / n, start % n)]) continue;
      queue_.clear();
      queue_.push_back(start);
      label_[static_cast<std::size_t>(start)] = 1;
      for (std::size_t h = 0; h < queue_.size(); ++h) {
        const int v = queue_[h];
        const int i = v / n, k = v % n;
        const int nb[4] = {((i + 1) % n) * n + k, ((i + n - 1) % n) * n + k, i * n + (k + 1) % n,
                           i * n + (k + n - 1) % n};
        for (int w : nb) {
          if (label_[static_cast<std::size_t>(w)] || !vacant[cell(w / n, w % n)]) continue;
          label_[static_cast<std::size_t>(w)] = 1;
          queue_.push_back(w);
        }
      }
      if (static_cast<int>(queue_.size()) < threshold + 1) continue;
      std::fill(proj_a_.begin(), proj_a_.end(), 0);
      std::fill(proj_b_.begin(), proj_b_.end(), 0);
      for (int v : queue_) {
        proj_a_[static_cast<std::size_t>(v / n)] = 1;
        proj_b_[static_cast<std::size_t>(v % n)] = 1;
      }
      const int diam = std::max(circular_extent(proj_a_), circular_extent(proj_b_));
      if (diam >= threshold && ++large >= stop) return large;
    }
    return large;
  }

 private:
  int n_;
  std::vector<std::uint8_t> label_;
  std::vector<int> queue_;
  std::vector<std::uint8_t> proj_a_;
  std::vector<std::uint8_t> proj_b_;
};

void erode_axis(const TorusGeometry& g, int j, const std::vector<std::uint8_t>& in, std::vector<std::uint8_t>& out,
                bool parallel) {
  const auto cells = static_cast<std::ptrdiff_t>(g.cell_count());
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < cells; ++i) {
    const auto idx = static_cast<CellIndex>(i);
    out[idx] = in[idx] && in[g.neighbor(idx, j, +1)] && in[g.neighbor(idx, j, -1)];
  }
}

}  // namespace

std::vector<std::uint8_t> vacancy_mask(const OccupancyGrid& grid, std::uint64_t t, bool parallel) {
  grid.check_time(t);
  const auto fv = grid.first_visit();
  std::vector<std::uint8_t> m(fv.size());
  const auto n = static_cast<std::ptrdiff_t>(fv.size());
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) m[static_cast<std::size_t>(i)] = fv[static_cast<std::size_t>(i)] > t;
  return m;
}

double vacant_fraction(const OccupancyGrid& grid, std::uint64_t t) {
  const std::uint64_t visited = grid.visited_count(t);
  const double cells = static_cast<double>(grid.geometry().cell_count());
  return (cells - static_cast<double>(visited)) / cells;
}

std::uint64_t VacantComponents::vacant_count() const { return std::accumulate(sizes.begin(), sizes.end(), std::uint64_t{0}); }

std::uint64_t VacantComponents::largest_size() const {
  return sizes.empty() ? 0 : *std::max_element(sizes.begin(), sizes.end());
}

VacantComponents vacant_components(const OccupancyGrid& grid, std::uint64_t t, int min_run_cells) {
  const TorusGeometry& g = grid.geometry();
  const auto vac = vacancy_mask(grid, t);
  VacantComponents out;
  out.t = t;
  out.min_run_cells = min_run_cells;
  out.label.assign(g.cell_count(), kNoComponent);
  std::vector<std::uint8_t> on_run;
  if (min_run_cells > 0) on_run = cells_on_long_runs(g, vac, min_run_cells);

  std::vector<CellIndex> queue;
  for (CellIndex s = 0; s < g.cell_count(); ++s) {
    if (!vac[s] || out.label[s] != kNoComponent) continue;
    const auto id = static_cast<std::uint32_t>(out.sizes.size());
    bool run = false;
    queue.clear();
    queue.push_back(s);
    out.label[s] = id;
    for (std::size_t h = 0; h < queue.size(); ++h) {
      const CellIndex v = queue[h];
      if (min_run_cells > 0 && on_run[v]) run = true;
      for (int j = 0; j < g.dim(); ++j)
        for (int sign : {-1, 1}) {
          const CellIndex w = g.neighbor(v, j, sign);
          if (vac[w] && out.label[w] == kNoComponent) {
            out.label[w] = id;
            queue.push_back(w);
          }
        }
    }
    out.sizes.push_back(queue.size());
    out.has_run.push_back(min_run_cells > 0 ? run : 1);
  }
  return out;
}

std::vector<std::uint8_t> cells_on_long_runs(const TorusGeometry& g, std::span<const std::uint8_t> vacant, int cells) {
  check_mask(g, vacant);
  const int n = g.side();
  std::vector<std::uint8_t> out(g.cell_count(), 0);
  std::vector<std::uint8_t> line;
  std::vector<int> run;
  for (int j = 0; j < g.dim(); ++j)
    for_each_line(g, j, [&](CellIndex base, CellIndex s) {
      load_line(vacant, base, s, n, line);
      forward_runs(line, run);
      for (int i = 0; i < n; ++i) {
        const int prev = (i + n - 1) % n;
        const bool start = line[static_cast<std::size_t>(i)] && (!line[static_cast<std::size_t>(prev)] || run[static_cast<std::size_t>(i)] == n);
        if (!start || run[static_cast<std::size_t>(i)] < cells) continue;
        const int len = run[static_cast<std::size_t>(i)];
        for (int k = 0; k < len; ++k) out[base + static_cast<CellIndex>((i + k) % n) * s] = 1;
        if (len == n) break;
      }
    });
  return out;
}

int longest_vacant_run(const OccupancyGrid& grid, std::uint64_t t) {
  const TorusGeometry& g = grid.geometry();
  const auto vac = vacancy_mask(grid, t);
  const int n = g.side();
  int best = 0;
  std::vector<std::uint8_t> line;
  std::vector<int> run;
  for (int j = 0; j < g.dim(); ++j)
    for_each_line(g, j, [&](CellIndex base, CellIndex s) {
      load_line(vac, base, s, n, line);
      forward_runs(line, run);
      best = std::max(best, *std::max_element(run.begin(), run.end()));
    });
  return best;
}

VReport detect_V(const OccupancyGrid& grid, std::uint64_t t, double K, double beta) {
  return detect_V_mask(grid.geometry(), vacancy_mask(grid, t), K, beta);
}

VReport detect_V_mask(const TorusGeometry& g, std::span<const std::uint8_t> vacant, double K, double beta) {
  check_mask(g, vacant);
  if (!(K >= 0) || !(beta >= 0)) throw ConfigError("detect_V needs K >= 0 and beta >= 0");
  const int n = g.side();
  VReport rep;
  rep.segment_length = log_length(K, n);
  rep.offsets = offset_count(n, beta);
  const int window = static_cast<int>(std::floor(std::pow(static_cast<double>(n), beta) + 1e-12));
  if (rep.segment_length + window + 1 > n)
    throw ConfigError("segment window does not fit: floor(K ln N) + floor(N^beta) + 1 > N");
  const int need = rep.segment_length + 1;

  std::vector<std::uint8_t> line;
  std::vector<int> run, next_good(static_cast<std::size_t>(n));
  rep.holds = true;
  for (int j = 0; j < g.dim() && rep.holds; ++j)
    for_each_line(g, j, [&](CellIndex base, CellIndex s) {
      if (!rep.holds) return;
      load_line(vacant, base, s, n, line);
      forward_runs(line, run);
      int g0 = -1;
      for (int i = 0; i < n; ++i)
        if (run[static_cast<std::size_t>(i)] >= need) {
          g0 = i;
          break;
        }
      if (g0 < 0) {
        rep.holds = false;
        rep.witness = LineWitness{TorusPoint::from_index(g, base), j};
        return;
      }
      next_good[static_cast<std::size_t>(g0)] = 0;
      for (int k = 1; k < n; ++k) {
        const int i = ((g0 - k) % n + n) % n;
        next_good[static_cast<std::size_t>(i)] =
            run[static_cast<std::size_t>(i)] >= need ? 0 : next_good[static_cast<std::size_t>((i + 1) % n)] + 1;
      }
      for (int i = 0; i < n; ++i)
        if (next_good[static_cast<std::size_t>(i)] >= rep.offsets) {
          rep.holds = false;
          rep.witness = LineWitness{TorusPoint::from_index(g, base + static_cast<CellIndex>(i) * s), j};
          return;
        }
    });
  return rep;
}

UReport detect_U(const OccupancyGrid& grid, std::uint64_t t, double K) {
  return detect_U_mask(grid.geometry(), vacancy_mask(grid, t), K);
}

UReport detect_U_mask(const TorusGeometry& g, std::span<const std::uint8_t> vacant, double K, bool parallel) {
  check_mask(g, vacant);
  if (!(K >= 0)) throw ConfigError("detect_U needs K >= 0");
  const int n = g.side();
  UReport rep;
  rep.threshold = log_length(K, n);
  if (rep.threshold > n - 1) return rep;  // no in-plane set reaches the threshold

  const auto families = plane_families(g);
  std::vector<std::pair<std::size_t, std::size_t>> work;
  for (std::size_t f = 0; f < families.size(); ++f)
    for (std::size_t b = 0; b < families[f].bases.size(); ++b) work.emplace_back(f, b);

  const auto total = static_cast<std::ptrdiff_t>(work.size());
  std::ptrdiff_t first_bad = total;
#pragma omp parallel if (parallel)
  {
    PlaneScanner scan(n);
#pragma omp for schedule(dynamic, 16) reduction(min : first_bad)
    for (std::ptrdiff_t w = 0; w < total; ++w) {
      if (w > first_bad) continue;
      const auto& fam = families[work[static_cast<std::size_t>(w)].first];
      const CellIndex base = fam.bases[work[static_cast<std::size_t>(w)].second];
      if (scan.count_large(vacant, base, g.stride(fam.a), g.stride(fam.b), rep.threshold, 2) >= 2)
        first_bad = std::min(first_bad, w);
    }
  }
  if (first_bad < total) {
    const auto& fam = families[work[static_cast<std::size_t>(first_bad)].first];
    const CellIndex base = fam.bases[work[static_cast<std::size_t>(first_bad)].second];
    PlaneScanner scan(n);
    rep.holds = false;
    rep.witness_count = scan.count_large(vacant, base, g.stride(fam.a), g.stride(fam.b), rep.threshold,
                                         std::numeric_limits<int>::max());
    rep.witness = CoordinatePlane(g, TorusPoint::from_index(g, base), fam.a, fam.b);
  }
  return rep;
}

PlanarConnector::PlanarConnector(const TorusGeometry& g, int radius)
    : g_(&g), radius_(radius), side_(2 * radius + 1) {
  if (radius < 0) throw GeometryError("connector radius must be >= 0");
  if (2 * radius + 1 > g.side()) throw GeometryError("connector box does not fit the torus (2 radius + 1 > N)");
  seen_.assign(static_cast<std::size_t>(side_) * side_, 0);
  queue_.reserve(seen_.size());
}

template <class Vacant>
bool PlanarConnector::connect(CellIndex x, Vacant&& vacant) {
  if (!vacant(x)) return false;
  if (radius_ == 0) return true;
  const TorusGeometry& g = *g_;
  const Coords c = g.coords(x);
  const int rho = radius_, m = side_;
  for (int a = 0; a < g.dim(); ++a)
    for (int b = a + 1; b < g.dim(); ++b) {
      const auto sa = static_cast<long long>(g.stride(a)), sb = static_cast<long long>(g.stride(b));
      const int ca = c[static_cast<std::size_t>(a)], cb = c[static_cast<std::size_t>(b)];
      const long long origin = static_cast<long long>(x) - ca * sa - cb * sb;
      auto global = [&](int p, int q) {
        return static_cast<CellIndex>(origin + g.wrap(ca + p) * sa + g.wrap(cb + q) * sb);
      };
      std::fill(seen_.begin(), seen_.end(), 0);
      queue_.clear();
      const int start = rho * m + rho;
      seen_[static_cast<std::size_t>(start)] = 1;
      queue_.push_back(start);
      for (std::size_t h = 0; h < queue_.size(); ++h) {
        const int v = queue_[h];
        const int p = v / m - rho, q = v % m - rho;
        if (std::max(std::abs(p), std::abs(q)) == rho) return true;
        const int nb[4][2] = {{p + 1, q}, {p - 1, q}, {p, q + 1}, {p, q - 1}};
        for (const auto& s : nb) {
          const int w = (s[0] + rho) * m + (s[1] + rho);
          if (seen_[static_cast<std::size_t>(w)]) continue;
          seen_[static_cast<std::size_t>(w)] = 1;
          if (vacant(global(s[0], s[1]))) queue_.push_back(w);
        }
      }
    }
  return false;
}

bool PlanarConnector::operator()(std::span<const std::uint8_t> vacant, CellIndex x) {
  return connect(x, [&](CellIndex i) { return vacant[i] != 0; });
}

bool PlanarConnector::operator()(const OccupancyGrid& grid, std::uint64_t t, CellIndex x) {
  return connect(x, [&](CellIndex i) { return grid.first_visit(i) > t; });
}

bool detect_C(const OccupancyGrid& grid, std::uint64_t t, double K, const TorusPoint& x) {
  grid.check_time(t);
  PlanarConnector conn(grid.geometry(), log_length(K, grid.geometry().side()));
  return conn(grid, t, x.index(grid.geometry()));
}

std::vector<TorusPoint> probe_lattice(const TorusGeometry& g, int spacing) {
  if (spacing < 1) throw GeometryError("probe spacing must be >= 1");
  const int per_axis = (g.side() + spacing - 1) / spacing;
  std::vector<TorusPoint> out;
  Coords c{};
  while (true) {
    out.push_back(TorusPoint::from_coords(g, c));
    int j = g.dim() - 1;
    while (j >= 0 && c[static_cast<std::size_t>(j)] / spacing == per_axis - 1) {
      c[static_cast<std::size_t>(j)] = 0;
      --j;
    }
    if (j < 0) break;
    c[static_cast<std::size_t>(j)] += spacing;
  }
  return out;
}

EventReport detect_G(const OccupancyGrid& grid, std::uint64_t t, double K, double beta,
                     std::span<const TorusPoint> probes) {
  const TorusGeometry& g = grid.geometry();
  const auto vac = vacancy_mask(grid, t);
  EventReport rep;
  rep.K = K;
  rep.beta = beta;
  rep.t = t;
  rep.L0 = log_length(K, g.side());
  rep.V = detect_V_mask(g, vac, K, beta);
  rep.U = detect_U_mask(g, vac, K);
  rep.G = rep.V.holds && rep.U.holds;

  const VacantComponents comps = vacant_components(grid, t, rep.L0 + 1);
  const double cells = static_cast<double>(g.cell_count());
  rep.largest_fraction = static_cast<double>(comps.largest_size()) / cells;
  std::uint32_t giant = kNoComponent;
  int carriers = 0;
  for (std::size_t k = 0; k < comps.count(); ++k)
    if (comps.has_run[k]) {
      ++carriers;
      giant = static_cast<std::uint32_t>(k);
    }
  rep.giant_unique = carriers == 1;
  if (rep.giant_unique) {
    rep.giant_size = comps.sizes[giant];
    rep.giant_fraction = static_cast<double>(rep.giant_size) / cells;
    // Dilate the giant by the cube of radius floor(N^beta), one axis at a time.
    const int R = static_cast<int>(std::floor(std::pow(static_cast<double>(g.side()), beta) + 1e-12));
    std::vector<std::uint8_t> cur(g.cell_count()), nxt(g.cell_count());
    for (CellIndex i = 0; i < g.cell_count(); ++i) cur[i] = comps.label[i] == giant;
    for (int step = 0; step < std::min(R, g.side() / 2); ++step)
      for (int j = 0; j < g.dim(); ++j) {
        for (CellIndex i = 0; i < g.cell_count(); ++i)
          nxt[i] = cur[i] || cur[g.neighbor(i, j, +1)] || cur[g.neighbor(i, j, -1)];
        cur.swap(nxt);
      }
    rep.neighborhood_covers = std::all_of(cur.begin(), cur.end(), [](std::uint8_t v) { return v != 0; });
  }

  rep.probes = probes.size();
  if (!probes.empty()) {
    PlanarConnector conn(g, rep.L0);
    std::size_t c_true = 0, in_giant = 0;
    for (const auto& x : probes) {
      const CellIndex xi = x.index(g);
      const bool c = conn(vac, xi);
      const bool inside = rep.giant_unique && comps.label[xi] == giant;
      c_true += c;
      in_giant += inside;
      if (c && rep.giant_unique && !inside) {
        ++rep.C_outside_giant;
        if (!rep.C_witness) rep.C_witness = x;
      }
    }
    rep.C_fraction = static_cast<double>(c_true) / static_cast<double>(probes.size());
    rep.giant_probe_fraction = static_cast<double>(in_giant) / static_cast<double>(probes.size());
  }
  return rep;
}

int largest_vacant_ball(const OccupancyGrid& grid, std::uint64_t t) {
  return largest_vacant_ball_mask(grid.geometry(), vacancy_mask(grid, t));
}

int largest_vacant_ball_mask(const TorusGeometry& g, std::span<const std::uint8_t> vacant, bool parallel) {
  check_mask(g, vacant);
  std::vector<std::uint8_t> cur(vacant.begin(), vacant.end()), tmp(cur.size());
  auto any = [](const std::vector<std::uint8_t>& v) {
    return std::any_of(v.begin(), v.end(), [](std::uint8_t b) { return b != 0; });
  };
  if (!any(cur)) return 0;
  if (std::all_of(cur.begin(), cur.end(), [](std::uint8_t b) { return b != 0; }))
    throw GeometryError("largest vacant ball needs at least one visited cell");
  // After k erosions by B(0,1), cur marks the centers of vacant balls of radius k.
  int k = 0;
  while (true) {
    for (int j = 0; j < g.dim(); ++j) {
      erode_axis(g, j, cur, tmp, parallel);
      cur.swap(tmp);
    }
    if (!any(cur)) return k;
    ++k;
  }
}

void LocalFunctionSpec::validate(const TorusGeometry& g) const {
  if (L < 0) throw ConfigError("local function box radius must be >= 0");
  if (2 * L + 1 > g.side()) throw ConfigError("local function box does not fit the torus");
  if (kind != LocalKind::table) return;
  const double cells = std::pow(2.0 * L + 1.0, g.dim());
  if (static_cast<double>(table.size()) != cells + 1)
    throw ConfigError("local function table needs one entry per visited count 0..|C|");
  for (std::size_t k = 0; k < table.size(); ++k) {
    if (!(table[k] >= 0.0 && table[k] <= 1.0)) throw ConfigError("local function values must lie in [0, 1]");
    if (k > 0 && table[k] > table[k - 1]) throw ConfigError("local function table is not non-increasing");
  }
}

LocalFunction::LocalFunction(const TorusGeometry& g, LocalFunctionSpec spec) : g_(&g), spec_(std::move(spec)) {
  spec_.validate(g);
  if (spec_.kind == LocalKind::phi1) connector_.emplace(g, spec_.L);
  if (spec_.kind == LocalKind::table) box_cells_ = ball_cells(g, TorusPoint::from_index(g, 0), spec_.L);
}

double LocalFunction::operator()(const OccupancyGrid& grid, CellIndex x, std::uint64_t t) {
  switch (spec_.kind) {
    case LocalKind::phi0:
      return grid.first_visit(x) > t ? 1.0 : 0.0;
    case LocalKind::phi1:
      return (*connector_)(grid, t, x) ? 1.0 : 0.0;
    case LocalKind::table: {
      const TorusGeometry& g = *g_;
      const Coords cx = g.coords(x);
      std::size_t visited = 0;
      for (CellIndex off : box_cells_) {
        Coords c = g.coords(off);
        for (int j = 0; j < g.dim(); ++j)
          c[static_cast<std::size_t>(j)] = g.wrap(static_cast<long long>(c[static_cast<std::size_t>(j)]) + cx[static_cast<std::size_t>(j)]);
        visited += grid.first_visit(g.index(c)) <= t;
      }
      return spec_.table[visited];
    }
  }
  return 0.0;
}

double gamma_average(const OccupancyGrid& grid, const LocalFunctionSpec& spec, std::uint64_t t, bool parallel) {
  grid.check_time(t);
  const TorusGeometry& g = grid.geometry();
  spec.validate(g);
  // Fixed chunking keeps the floating-point sum independent of thread count.
  constexpr CellIndex kChunk = 4096;
  const CellIndex cells = g.cell_count();
  const auto chunks = static_cast<std::ptrdiff_t>((cells + kChunk - 1) / kChunk);
  std::vector<double> partial(static_cast<std::size_t>(chunks), 0.0);
#pragma omp parallel if (parallel)
  {
    LocalFunction h(g, spec);
#pragma omp for schedule(dynamic, 4)
    for (std::ptrdiff_t c = 0; c < chunks; ++c) {
      const CellIndex lo = static_cast<CellIndex>(c) * kChunk;
      const CellIndex hi = std::min(cells, lo + kChunk);
      double s = 0.0;
      for (CellIndex x = lo; x < hi; ++x) s += h(grid, x, t);
      partial[static_cast<std::size_t>(c)] = s;
    }
  }
  double total = 0.0;
  for (double s : partial) total += s;
  return total / static_cast<double>(cells);
}

GammaTilde gamma_tilde(const OccupancyGrid& grid, const LocalFunctionSpec& spec, std::span<const TorusPoint> probes,
                       std::span<const ExcursionSchedule> schedules, std::size_t ell_star) {
  if (probes.size() != schedules.size()) throw ConfigError("one schedule per probe is required");
  if (probes.empty()) throw ConfigError("gamma_tilde needs at least one probe");
  const TorusGeometry& g = grid.geometry();
  LocalFunction h(g, spec);
  GammaTilde out;
  out.probes = probes.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    std::uint64_t time = 0;
    if (ell_star > 0) {
      const auto& dep = schedules[i].departures;
      if (dep.size() >= ell_star) {
        time = std::min(dep[ell_star - 1], grid.total_steps());
      } else {
        time = grid.total_steps();
        ++out.unreached;
      }
    }
    const double v = h(grid, probes[i].index(g), time);
    out.h.push_back(v);
    sum += v;
  }
  out.value = sum / static_cast<double>(probes.size());
  return out;
}

bool is_planar(const TorusGeometry& g, std::span<const TorusPoint> A) {
  if (A.empty()) return false;
  int varying = 0;
  for (int j = 0; j < g.dim(); ++j) {
    bool differs = false;
    for (const auto& p : A) differs = differs || p[j] != A.front()[j];
    varying += differs;
  }
  return varying <= 2;
}

double covered_translate_fraction(const OccupancyGrid& grid, std::uint64_t t, std::span<const TorusPoint> A) {
  grid.check_time(t);
  const TorusGeometry& g = grid.geometry();
  if (A.empty()) throw ConfigError("coverage needs a nonempty set");
  std::vector<Coords> off;
  for (const auto& p : A) off.push_back(p.coords());
  const auto cells = static_cast<std::ptrdiff_t>(g.cell_count());
  std::int64_t covered = 0;
#pragma omp parallel for schedule(static) reduction(+ : covered)
  for (std::ptrdiff_t y = 0; y < cells; ++y) {
    const Coords cy = g.coords(static_cast<CellIndex>(y));
    bool all = true;
    for (const auto& a : off) {
      Coords c{};
      for (int j = 0; j < g.dim(); ++j)
        c[static_cast<std::size_t>(j)] = g.wrap(static_cast<long long>(cy[static_cast<std::size_t>(j)]) + a[static_cast<std::size_t>(j)]);
      if (grid.first_visit(g.index(c)) > t) {
        all = false;
        break;
      }
    }
    covered += all;
  }
  return static_cast<double>(covered) / static_cast<double>(cells);
}

CoverageEstimate coverage_probability(const TorusGeometry& g, std::span<const TorusPoint> A, double u,
                                      std::size_t replicas, std::uint64_t seed, CoverageMode mode) {
  if (A.empty()) throw ConfigError("coverage needs a nonempty set");
  if (!is_planar(g, A)) throw ConfigError("coverage set is not contained in a coordinate plane");
  if (replicas == 0) throw ConfigError("coverage needs at least one replica");
  std::vector<double> score(replicas, 0.0);
  (void)WalkConfig::steps_for(g, u);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t ri = 0; ri < static_cast<std::ptrdiff_t>(replicas); ++ri) {
    const auto r = static_cast<std::size_t>(ri);
    WalkConfig cfg{g, u, std::nullopt, seed, r};
    const OccupancyGrid grid = run_walk(cfg);
    const std::uint64_t t = grid.total_steps();
    if (mode == CoverageMode::translation_average) {
      score[r] = covered_translate_fraction(grid, t, A);
    } else {
      bool all = true;
      for (const auto& p : A) all = all && grid.visited_by(p.index(g), t);
      score[r] = all ? 1.0 : 0.0;
    }
  }
  CoverageEstimate est;
  est.replicas = replicas;
  const auto s = stats::summarize(score);
  est.estimate = s.mean;
  if (mode == CoverageMode::translation_average) {
    est.ci = stats::mean_interval(s);
    est.method = "translation_average";
  } else {
    est.ci = stats::wilson(static_cast<std::uint64_t>(std::llround(s.mean * static_cast<double>(replicas))), replicas);
    est.method = "fixed_set";
  }
  return est;
}

}  // namespace torvac
