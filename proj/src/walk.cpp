#include "torvac/walk.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace torvac {

std::uint64_t WalkConfig::steps_for(const TorusGeometry& g, double u) {
  if (!std::isfinite(u) || u < 0.0) throw ConfigError("u must be a finite nonnegative number");
  const double t = std::floor(u * static_cast<double>(g.cell_count()));
  if (t > static_cast<double>(kMaxSteps))
    throw ConfigError("u * N^d exceeds the 32-bit first-visit time range");
  return static_cast<std::uint64_t>(t);
}

std::uint64_t WalkConfig::steps() const { return steps_for(geometry, u); }

OccupancyGrid::OccupancyGrid(TorusGeometry g, std::uint64_t total_steps, std::vector<std::uint32_t> first_visit,
                             std::uint64_t seed, std::uint64_t replica_index)
    : g_(g), total_steps_(total_steps), first_visit_(std::move(first_visit)), seed_(seed), replica_(replica_index) {
  if (first_visit_.size() != g_.cell_count()) throw GeometryError("first-visit array size does not match N^d");
  if (total_steps_ > kMaxSteps) throw ConfigError("total steps exceed the 32-bit time range");
}

OccupancyGrid::OccupancyGrid(TorusGeometry g, std::uint64_t total_steps)
    : OccupancyGrid(g, total_steps, std::vector<std::uint32_t>(g.cell_count(), kNeverVisited)) {}

std::uint64_t OccupancyGrid::visited_count(std::uint64_t t) const {
  check_time(t);
  std::uint64_t n = 0;
  for (std::uint32_t v : first_visit_) n += (v <= t);
  return n;
}

void OccupancyGrid::check_time(std::uint64_t t) const {
  if (t > total_steps_)
    throw ConfigError("query time " + std::to_string(t) + " beyond walk horizon " + std::to_string(total_steps_));
}

CounterRng walk_stream(const WalkConfig& config) { return CounterRng(config.seed, config.replica_index); }

TorusPoint draw_start(const WalkConfig& config, CounterRng& rng) {
  const TorusGeometry& g = config.geometry;
  if (config.start) {
    if (config.start->dim() != g.dim()) throw GeometryError("start point dimension mismatch");
    return *config.start;
  }
  return TorusPoint::from_index(g, static_cast<CellIndex>(rng.below(g.cell_count())));
}

std::size_t ExcursionSchedule::completed_by(std::uint64_t t) const {
  return static_cast<std::size_t>(std::upper_bound(departures.begin(), departures.end(), t) - departures.begin());
}

std::size_t ExcursionSchedule::returns_by(std::uint64_t t) const {
  return static_cast<std::size_t>(std::upper_bound(returns.begin(), returns.end(), t) - returns.begin());
}

ExcursionTracker::ExcursionTracker(const TorusGeometry& g, std::vector<LinfBox> inner, std::vector<LinfBox> outer)
    : g_(&g) {
  if (inner.empty() || outer.empty()) throw GeometryError("excursion tracker needs nonempty box lists");
  for (const auto& a : inner) {
    bool covered = false;
    for (const auto& b : outer) covered = covered || box_contains(g, b, a);
    if (!covered) throw GeometryError("inner box " + to_string(a.center) + " is not inside any outer box");
  }
  sched_.inner = std::move(inner);
  sched_.outer = std::move(outer);
}

bool ExcursionTracker::in_union(const std::vector<LinfBox>& boxes, const Coords& c) const {
  for (const auto& b : boxes)
    if (box_contains(*g_, b, c)) return true;
  return false;
}

void ExcursionTracker::observe_cell(std::uint64_t time, const Coords& c) {
  if (!inside_) {
    if (in_union(sched_.inner, c)) {
      sched_.returns.push_back(time);
      last_in_a_ = time;
      inside_ = true;
    }
    return;
  }
  if (in_union(sched_.inner, c)) {
    last_in_a_ = time;
  } else if (!in_union(sched_.outer, c)) {
    sched_.departures.push_back(time);
    sched_.last_visits.push_back(last_in_a_);
    inside_ = false;
  }
}

void ExcursionTracker::observe(std::uint64_t time, const WalkerState& s) { observe_cell(time, s.coords()); }

ExcursionSchedule ExcursionTracker::schedule() const {
  ExcursionSchedule s = sched_;
  s.open = inside_;
  return s;
}

ExcursionSchedule excursion_schedule(const TorusGeometry& g, std::span<const CellIndex> path,
                                     std::vector<LinfBox> inner, std::vector<LinfBox> outer) {
  ExcursionTracker tracker(g, std::move(inner), std::move(outer));
  for (std::size_t k = 0; k < path.size(); ++k) tracker.observe_cell(k, g.coords(path[k]));
  return tracker.schedule();
}

BoxExcursionCounts count_box_excursions(const WalkConfig& config, const TorusPoint& x, int L, int r,
                                        std::span<const double> checkpoints) {
  const TorusGeometry& g = config.geometry;
  if (checkpoints.empty()) throw ConfigError("no checkpoints given");
  if (L < 0 || r < L) throw GeometryError("probe radii must satisfy 0 <= L <= r");
  BoxExcursionCounts out;
  out.macro_inner_radius = g.side() / 8;
  out.macro_outer_radius = g.side() / 4;
  ExcursionTracker macro(g, {make_box(g, x, out.macro_inner_radius)}, {make_box(g, x, out.macro_outer_radius)});
  ExcursionTracker probe(g, {make_box(g, x, L)}, {make_box(g, x, r)});

  WalkConfig run = config;
  run.u = *std::max_element(checkpoints.begin(), checkpoints.end());
  drive_walk(run, macro, probe);

  const ExcursionSchedule ms = macro.schedule();
  const ExcursionSchedule ps = probe.schedule();
  for (double u : checkpoints) {
    const std::uint64_t t = WalkConfig::steps_for(g, u);
    out.u.push_back(u);
    out.macro_completed.push_back(ms.completed_by(t));
    out.macro_returns.push_back(ms.returns_by(t));
    out.probe_completed.push_back(ps.completed_by(t));
    out.probe_returns.push_back(ps.returns_by(t));
  }
  return out;
}

namespace {

constexpr char kMagic[8] = {'T', 'V', 'G', 'R', 'I', 'D', '0', '1'};

template <class T>
void put_le(std::ostream& os, T v) {
  std::array<char, sizeof(T)> b{};
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
  os.write(b.data(), b.size());
}

template <class T>
T get_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> b{};
  is.read(reinterpret_cast<char*>(b.data()), b.size());
  if (!is) throw FormatError("grid file truncated");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return static_cast<T>(v);
}

}  // namespace

void write_grid(const std::string& path, const OccupancyGrid& grid) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os.write(kMagic, sizeof kMagic);
  put_le<std::uint8_t>(os, kGridFormatVersion);
  put_le<std::uint8_t>(os, static_cast<std::uint8_t>(grid.geometry().dim()));
  put_le<std::uint16_t>(os, 0);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(grid.geometry().side()));
  put_le<std::uint64_t>(os, grid.total_steps());
  put_le<std::uint64_t>(os, grid.seed());
  put_le<std::uint64_t>(os, grid.replica_index());
  for (std::uint32_t v : grid.first_visit()) put_le<std::uint32_t>(os, v);
  if (!os) throw std::runtime_error("write failed for " + path);
}

OccupancyGrid read_grid(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open grid file " + path);
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw FormatError("bad magic in grid file " + path);
  const auto version = get_le<std::uint8_t>(is);
  if (version != kGridFormatVersion) throw FormatError("unsupported grid file version " + std::to_string(version));
  const int d = get_le<std::uint8_t>(is);
  (void)get_le<std::uint16_t>(is);
  const auto n = get_le<std::uint32_t>(is);
  const auto t = get_le<std::uint64_t>(is);
  const auto seed = get_le<std::uint64_t>(is);
  const auto replica = get_le<std::uint64_t>(is);
  if (n > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) throw FormatError("side length out of range");
  TorusGeometry g = [&] {
    try {
      return TorusGeometry(d, static_cast<int>(n));
    } catch (const GeometryError& e) {
      throw FormatError(std::string("grid header: ") + e.what());
    }
  }();
  if (t > kMaxSteps) throw FormatError("grid header time out of range");
  std::vector<std::uint32_t> fv(g.cell_count());
  for (auto& v : fv) {
    v = get_le<std::uint32_t>(is);
    if (v != kNeverVisited && v > t) throw FormatError("first-visit time beyond the recorded horizon");
  }
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes in grid file");
  return OccupancyGrid(g, t, std::move(fv), seed, replica);
}

std::string schedule_to_ndjson(const ExcursionSchedule& s, int L, int r) {
  nlohmann::json j;
  std::vector<int> center;
  if (!s.inner.empty()) {
    const TorusPoint& c = s.inner.front().center;
    for (int k = 0; k < c.dim(); ++k) center.push_back(c[k]);
  }
  j["center"] = center;
  j["L"] = L;
  j["r"] = r;
  j["R"] = s.returns;
  j["D"] = s.departures;
  j["open"] = s.open;
  return j.dump();
}

}  // namespace torvac
