#pragma once

// Simple random walk on the torus with streaming observers.
//
// run_walk() fills an OccupancyGrid (first-visit time per cell) and feeds
// every (time, position) event, in order, to each observer. Observers are
// plain objects with
//     void observe(std::uint64_t time, const WalkerState& state);
// and are passed by reference, so the hot loop has no virtual dispatch.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "torvac/lattice.hpp"
#include "torvac/rng.hpp"

namespace torvac {

inline constexpr std::uint32_t kNeverVisited = std::numeric_limits<std::uint32_t>::max();
// Largest admissible step count; first-visit times are 32-bit.
inline constexpr std::uint64_t kMaxSteps = std::numeric_limits<std::uint32_t>::max() - 1ULL;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct WalkConfig {
  TorusGeometry geometry;
  double u = 0.0;
  std::optional<TorusPoint> start;  // uniform when empty
  std::uint64_t seed = 0;
  std::uint64_t replica_index = 0;

  // floor(u * N^d); throws ConfigError when negative or beyond 32-bit times.
  std::uint64_t steps() const;
  static std::uint64_t steps_for(const TorusGeometry& g, double u);
};

class WalkerState {
 public:
  WalkerState(const TorusGeometry& g, const Coords& c) : g_(&g), c_(c), idx_(g.index(c)) {}

  const Coords& coords() const { return c_; }
  CellIndex index() const { return idx_; }
  const TorusGeometry& geometry() const { return *g_; }

  // direction in [0, 2d): axis = direction / 2, sign = + for odd.
  void move(std::uint32_t direction) {
    const auto j = static_cast<std::size_t>(direction >> 1);
    const int n = g_->side();
    const CellIndex s = g_->stride(static_cast<int>(j));
    int& c = c_[j];
    if (direction & 1u) {
      if (++c == n) {
        c = 0;
        idx_ -= s * static_cast<CellIndex>(n - 1);
      } else {
        idx_ += s;
      }
    } else {
      if (c-- == 0) {
        c = n - 1;
        idx_ += s * static_cast<CellIndex>(n - 1);
      } else {
        idx_ -= s;
      }
    }
  }

  void jump(const Coords& offset) {
    for (int j = 0; j < g_->dim(); ++j)
      c_[static_cast<std::size_t>(j)] = g_->wrap(static_cast<long long>(c_[static_cast<std::size_t>(j)]) + offset[static_cast<std::size_t>(j)]);
    idx_ = g_->index(c_);
  }

 private:
  const TorusGeometry* g_;
  Coords c_;
  CellIndex idx_;
};

class OccupancyGrid {
 public:
  OccupancyGrid(TorusGeometry g, std::uint64_t total_steps, std::vector<std::uint32_t> first_visit,
                std::uint64_t seed = 0, std::uint64_t replica_index = 0);
  OccupancyGrid(TorusGeometry g, std::uint64_t total_steps);  // all cells never visited

  const TorusGeometry& geometry() const { return g_; }
  std::uint64_t total_steps() const { return total_steps_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t replica_index() const { return replica_; }
  std::span<const std::uint32_t> first_visit() const { return first_visit_; }
  std::uint32_t first_visit(CellIndex idx) const { return first_visit_[idx]; }

  bool visited_by(CellIndex idx, std::uint64_t t) const { return first_visit_[idx] <= t; }
  bool vacant_at(CellIndex idx, std::uint64_t t) const { return first_visit_[idx] > t; }
  std::uint64_t visited_count(std::uint64_t t) const;

  // Validates t <= total_steps.
  void check_time(std::uint64_t t) const;

  void set_first_visit(CellIndex idx, std::uint32_t time) { first_visit_[idx] = time; }

 private:
  TorusGeometry g_;
  std::uint64_t total_steps_;
  std::vector<std::uint32_t> first_visit_;
  std::uint64_t seed_ = 0;
  std::uint64_t replica_ = 0;
};

// Random stream of a replica and its starting cell.
CounterRng walk_stream(const WalkConfig& config);
TorusPoint draw_start(const WalkConfig& config, CounterRng& rng);

// Drives the walk for config.steps() steps, feeding observers only.
template <class... Observers>
void drive_walk(const WalkConfig& config, Observers&... observers) {
  const std::uint64_t steps = config.steps();
  const TorusGeometry& g = config.geometry;
  CounterRng rng = walk_stream(config);
  WalkerState w(g, draw_start(config, rng).coords());
  (observers.observe(0, w), ...);
  SmallChoiceStream choice(rng, static_cast<std::uint32_t>(2 * g.dim()));
  for (std::uint64_t t = 1; t <= steps; ++t) {
    w.move(choice.next());
    (observers.observe(t, w), ...);
  }
}

// Simulates the walk, fills first-visit times, and feeds observers.
template <class... Observers>
OccupancyGrid run_walk(const WalkConfig& config, Observers&... observers) {
  const std::uint64_t steps = config.steps();
  const TorusGeometry& g = config.geometry;
  std::vector<std::uint32_t> fv(g.cell_count(), kNeverVisited);
  CounterRng rng = walk_stream(config);
  WalkerState w(g, draw_start(config, rng).coords());
  fv[w.index()] = 0;
  (observers.observe(0, w), ...);
  SmallChoiceStream choice(rng, static_cast<std::uint32_t>(2 * g.dim()));
  std::uint32_t* cells = fv.data();
  for (std::uint64_t t = 1; t <= steps; ++t) {
    w.move(choice.next());
    std::uint32_t& slot = cells[w.index()];
    if (slot == kNeverVisited) slot = static_cast<std::uint32_t>(t);
    (observers.observe(t, w), ...);
  }
  return OccupancyGrid(g, steps, std::move(fv), config.seed, config.replica_index);
}

// Records the full path (cell indices); refuses walks longer than the cap.
class PathRecorder {
 public:
  explicit PathRecorder(std::uint64_t cap = 2'000'000) : cap_(cap) {}
  void observe(std::uint64_t time, const WalkerState& s) {
    if (time >= cap_) throw ConfigError("path retention cap exceeded");
    path_.push_back(s.index());
  }
  const std::vector<CellIndex>& path() const { return path_; }

 private:
  std::uint64_t cap_;
  std::vector<CellIndex> path_;
};

// Successive returns to A (union of `inner` boxes) and departures from
// A~ (union of `outer` boxes), with last visits to A inside each excursion:
//   R_1 = H_A, D_1 = first exit from A~ after R_1,
//   R_{k+1} = first entrance in A after D_k, and so on.
struct ExcursionSchedule {
  std::vector<LinfBox> inner;
  std::vector<LinfBox> outer;
  std::vector<std::uint64_t> returns;
  std::vector<std::uint64_t> departures;
  std::vector<std::uint64_t> last_visits;
  bool open = false;  // a return without a departure before the horizon

  std::size_t completed() const { return departures.size(); }
  // Excursions completed by time t: #{k : D_k <= t}.
  std::size_t completed_by(std::uint64_t t) const;
  // Returns by time t: #{k : R_k <= t}.
  std::size_t returns_by(std::uint64_t t) const;
};

class ExcursionTracker {
 public:
  // Throws GeometryError unless every inner box lies inside some outer box.
  ExcursionTracker(const TorusGeometry& g, std::vector<LinfBox> inner, std::vector<LinfBox> outer);

  void observe(std::uint64_t time, const WalkerState& s);
  void observe_cell(std::uint64_t time, const Coords& c);

  ExcursionSchedule schedule() const;

 private:
  bool in_union(const std::vector<LinfBox>& boxes, const Coords& c) const;

  const TorusGeometry* g_;
  ExcursionSchedule sched_;
  bool inside_ = false;
  std::uint64_t last_in_a_ = 0;
};

// Replays a stored path through an ExcursionTracker.
ExcursionSchedule excursion_schedule(const TorusGeometry& g, std::span<const CellIndex> path,
                                     std::vector<LinfBox> inner, std::vector<LinfBox> outer);

struct BoxExcursionCounts {
  std::vector<double> u;            // checkpoints
  std::vector<std::uint64_t> macro_completed;
  std::vector<std::uint64_t> macro_returns;
  std::vector<std::uint64_t> probe_completed;
  std::vector<std::uint64_t> probe_returns;
  int macro_inner_radius = 0;
  int macro_outer_radius = 0;
};

// Excursion counts at each checkpoint u for the macroscopic pair
// B(x, floor(N/8)) / B(x, floor(N/4)) and the probe pair B(x, L) / B(x, r).
// Runs the walk without a grid up to the largest checkpoint.
BoxExcursionCounts count_box_excursions(const WalkConfig& config, const TorusPoint& x, int L, int r,
                                        std::span<const double> checkpoints);

// Grid snapshot file (little-endian):
//   magic "TVGRID01" (8 bytes), version byte (1), d (u8), reserved (u16),
//   N (u32), t (u64), seed (u64), replica_index (u64),
//   then N^d first-visit times (u32, 0xffffffff = never) in row-major order.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint8_t kGridFormatVersion = 1;

void write_grid(const std::string& path, const OccupancyGrid& grid);
OccupancyGrid read_grid(const std::string& path);

// NDJSON: {"center":[...],"L":..,"r":..,"R":[...],"D":[...],"open":bool}
std::string schedule_to_ndjson(const ExcursionSchedule& s, int L, int r);

}  // namespace torvac
