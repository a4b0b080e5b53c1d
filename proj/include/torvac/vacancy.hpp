#pragma once

// Vacant-set geometry at a query time t, read from an OccupancyGrid.
// A cell is vacant at t when its first-visit time exceeds t.
//
// Length conventions: a segment or axis run "of length l" has l + 1 cells,
// matching x + [0, l] e_j. Component and run sizes are reported in cells.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "torvac/lattice.hpp"
#include "torvac/stats.hpp"
#include "torvac/walk.hpp"

namespace torvac {

inline constexpr std::uint32_t kNoComponent = 0xffffffffu;

// Kernels taking `parallel` run under OpenMP when true and serially otherwise;
// both paths give identical results.
std::vector<std::uint8_t> vacancy_mask(const OccupancyGrid& grid, std::uint64_t t, bool parallel = true);
double vacant_fraction(const OccupancyGrid& grid, std::uint64_t t);

struct VacantComponents {
  std::uint64_t t = 0;
  int min_run_cells = 0;
  std::vector<std::uint32_t> label;  // kNoComponent on visited cells
  std::vector<std::uint64_t> sizes;
  std::vector<std::uint8_t> has_run;  // contains an axis run of >= min_run_cells cells

  std::size_t count() const { return sizes.size(); }
  std::uint64_t vacant_count() const;
  std::uint64_t largest_size() const;
};

// Nearest-neighbor labelling of the vacant set; labels follow the order of
// the smallest cell index in each component.
VacantComponents vacant_components(const OccupancyGrid& grid, std::uint64_t t, int min_run_cells = 0);

// Longest vacant axis run in cells (N when a whole line is vacant).
int longest_vacant_run(const OccupancyGrid& grid, std::uint64_t t);

// Per-cell flag: the cell lies on a vacant axis run of at least `cells` cells.
std::vector<std::uint8_t> cells_on_long_runs(const TorusGeometry& g, std::span<const std::uint8_t> vacant, int cells);

struct LineWitness {
  TorusPoint cell;
  int direction = 0;
};

struct VReport {
  bool holds = false;
  int segment_length = 0;  // floor(K ln N)
  int offsets = 0;         // number of admissible shifts m
  std::optional<LineWitness> witness;
};

// Every x and direction j admit 0 <= m < N^beta with x + (m + [0, l]) e_j
// vacant, l = floor(K ln N). Requires l + floor(N^beta) + 1 <= N.
VReport detect_V(const OccupancyGrid& grid, std::uint64_t t, double K, double beta);
// Same test on a precomputed vacancy mask.
VReport detect_V_mask(const TorusGeometry& g, std::span<const std::uint8_t> vacant, double K, double beta);

struct UReport {
  bool holds = true;
  int threshold = 0;  // floor(K ln N)
  std::optional<CoordinatePlane> witness;
  int witness_count = 0;  // large components in the witness plane
};

// In every coordinate plane at most one in-plane vacant component has
// plane diameter >= floor(K ln N).
UReport detect_U(const OccupancyGrid& grid, std::uint64_t t, double K);
UReport detect_U_mask(const TorusGeometry& g, std::span<const std::uint8_t> vacant, double K,
                      bool parallel = true);

// x is vacant and joined to S(x, radius) by a vacant nearest-neighbor path
// inside some coordinate plane through x. Requires 2 radius + 1 <= N.
class PlanarConnector {
 public:
  PlanarConnector(const TorusGeometry& g, int radius);
  bool operator()(std::span<const std::uint8_t> vacant, CellIndex x);
  bool operator()(const OccupancyGrid& grid, std::uint64_t t, CellIndex x);
  int radius() const { return radius_; }

 private:
  template <class Vacant>
  bool connect(CellIndex x, Vacant&& vacant);

  const TorusGeometry* g_;
  int radius_;
  int side_;
  std::vector<std::uint8_t> seen_;
  std::vector<int> queue_;
};

bool detect_C(const OccupancyGrid& grid, std::uint64_t t, double K, const TorusPoint& x);

// Regular sublattice with the given spacing along every axis, from the origin.
std::vector<TorusPoint> probe_lattice(const TorusGeometry& g, int spacing);

struct EventReport {
  double K = 0.0;
  double beta = 0.0;
  int L0 = 0;
  std::uint64_t t = 0;
  VReport V;
  UReport U;
  bool G = false;
  bool giant_unique = false;
  std::uint64_t giant_size = 0;
  double giant_fraction = 0.0;
  bool neighborhood_covers = false;  // every cell within N^beta of the giant
  double largest_fraction = 0.0;
  std::size_t probes = 0;
  double C_fraction = 0.0;
  double giant_probe_fraction = 0.0;  // probes lying in the giant
  std::size_t C_outside_giant = 0;    // probes with C true but not in the giant (0 on G)
  std::optional<TorusPoint> C_witness;
};

// V and U with K, G = V and U, the giant as the unique component carrying
// an axis run of L0 + 1 cells (L0 = floor(K ln N)), and C over the probes.
EventReport detect_G(const OccupancyGrid& grid, std::uint64_t t, double K, double beta,
                     std::span<const TorusPoint> probes);

// max over x of (sup-distance from x to the visited set) - 1, clamped at 0.
int largest_vacant_ball(const OccupancyGrid& grid, std::uint64_t t);
int largest_vacant_ball_mask(const TorusGeometry& g, std::span<const std::uint8_t> vacant, bool parallel = true);

enum class LocalKind { phi0, phi1, table };

struct LocalFunctionSpec {
  LocalKind kind = LocalKind::phi0;
  int L = 1;
  // For `table`: value by number of visited cells of C(x); non-increasing, in [0, 1].
  std::vector<double> table;

  void validate(const TorusGeometry& g) const;
};

class LocalFunction {
 public:
  LocalFunction(const TorusGeometry& g, LocalFunctionSpec spec);
  // h(x, t) = phi((X_[0,t] cap C(x)) - x).
  double operator()(const OccupancyGrid& grid, CellIndex x, std::uint64_t t);
  const LocalFunctionSpec& spec() const { return spec_; }

 private:
  const TorusGeometry* g_;
  LocalFunctionSpec spec_;
  std::vector<CellIndex> box_cells_;
  std::optional<PlanarConnector> connector_;
};

double gamma_average(const OccupancyGrid& grid, const LocalFunctionSpec& spec, std::uint64_t t,
                     bool parallel = true);

struct GammaTilde {
  double value = 0.0;
  std::size_t probes = 0;
  std::size_t unreached = 0;  // probes whose l*-th departure lies beyond the horizon
  std::vector<double> h;      // per-probe values
};

// Average over probes of h(x, D^x_{l*}); the l*-th departure of x's own
// C(x)/C~(x) schedule, D_0 = 0, and the horizon when not reached.
GammaTilde gamma_tilde(const OccupancyGrid& grid, const LocalFunctionSpec& spec,
                       std::span<const TorusPoint> probes, std::span<const ExcursionSchedule> schedules,
                       std::size_t ell_star);

bool is_planar(const TorusGeometry& g, std::span<const TorusPoint> A);

// Fraction of translates y + A fully visited by time t.
double covered_translate_fraction(const OccupancyGrid& grid, std::uint64_t t, std::span<const TorusPoint> A);

struct CoverageEstimate {
  double estimate = 0.0;
  stats::Interval ci;
  std::size_t replicas = 0;
  std::string method;
};

enum class CoverageMode { translation_average, fixed_set };

// P[X_[0, u N^d] contains A] for planar A. translation_average averages the
// per-replica covered-translate fraction (t-interval over replicas);
// fixed_set scores A itself in each replica (Wilson interval).
CoverageEstimate coverage_probability(const TorusGeometry& g, std::span<const TorusPoint> A, double u,
                                      std::size_t replicas, std::uint64_t seed,
                                      CoverageMode mode = CoverageMode::translation_average);

}  // namespace torvac
