#pragma once

// Excursions of the torus walk into small boxes, compared with the limit law
// Q through finite summaries.
//
// Total variation follows the convention sum_a |p(a) - q(a)| (range [0, 2]);
// the mismatch probability of a maximal coupling is half of it.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "torvac/harmonic.hpp"
#include "torvac/lattice.hpp"
#include "torvac/stats.hpp"

namespace torvac {

struct CouplingGeometry {
  int d = 3;
  int N = 0;
  int L = 0;                  // core radius
  int r = 0;                  // halo radius
  std::vector<Coords> centers;
  Coords start{};

  // Two centers at distance N / 2 along axis 0 and a start off both halos.
  static CouplingGeometry standard(int d, int L, int r, int N);
  // Smallest even N >= 4 r + 8.
  static int default_N(int r);
  void validate() const;  // throws ConfigError
};

struct ExcursionSummary {
  int center = 0;
  std::size_t entry = 0;       // index into box_boundary(d, L)
  std::uint32_t trace = 0;     // distinct core cells visited before leaving the halo
  std::int64_t duration = -1;  // last visit time minus entry time; -1 when jumps hid it
  Coords exit{};               // first point outside the halo, centered
};

struct QuwSample {
  CouplingGeometry geometry;
  std::vector<ExcursionSummary> summaries;
  std::uint64_t jumps = 0;
  std::uint64_t steps = 0;

  std::map<Coords, std::uint64_t> strata() const;  // samples per exit point
};

// Runs n independent torus walks from geometry.start until the first
// departure from the halo union after the first entrance into a core.
QuwSample sample_Quw(const CouplingGeometry& geometry, std::size_t n, std::uint64_t seed);

enum class SummaryAxis { entry, trace, joint };
const char* to_string(SummaryAxis a);
SummaryAxis parse_axis(const std::string& s);

// Geometric trace buckets {1}, {2}, {3-4}, {5-8}, ...
int trace_bucket(std::uint32_t trace);
int trace_bucket_count(int d, int L);

struct SummaryHistogram {
  SummaryAxis axis = SummaryAxis::joint;
  int d = 0;
  int L = 0;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  static SummaryHistogram empty(SummaryAxis axis, int d, int L);
  std::size_t atom(std::size_t entry, std::uint32_t trace) const;
  void add(std::size_t entry, std::uint32_t trace);
  void merge(const SummaryHistogram& other);
  bool same_atoms(const SummaryHistogram& other) const;
};

SummaryHistogram histogram(const QuwSample& s, SummaryAxis axis);
SummaryHistogram histogram_for_stratum(const QuwSample& s, SummaryAxis axis, const Coords& exit);
SummaryHistogram histogram(const QSummarySet& s, const HarmonicProfile& profile, SummaryAxis axis);

struct TvEstimate {
  double raw = 0.0;
  double bias_corrected = 0.0;
  stats::Interval ci;  // basic bootstrap interval of the corrected value
  std::uint64_t n_p = 0, n_q = 0;
  const char* convention = "sum |p - q|";
};

// Raw plug-in distance, a per-atom folded-normal bias correction, and a
// two-sample multinomial bootstrap.
TvEstimate tv_distance(const SummaryHistogram& p, const SummaryHistogram& q, int bootstrap_reps = 200,
                       std::uint64_t seed = 1);
double tv_raw(const std::vector<double>& p, const std::vector<double>& q);

struct MaximalCoupling {
  std::size_t atoms = 0;
  std::vector<double> joint;  // row-major, joint[i * atoms + j] = P(X = i, Y = j)
  double mismatch = 0.0;      // P(X != Y) = 1/2 sum |p - q|

  double at(std::size_t i, std::size_t j) const { return joint[i * atoms + j]; }
};

MaximalCoupling maximal_coupling(const std::vector<double>& p, const std::vector<double>& q);

struct TvStudyRow {
  int L = 0, r = 0, N = 0;
  std::uint64_t n = 0;
  TvEstimate tv;
  double q_bias_bound = 0.0;
};

struct TvStudyOptions {
  int d = 3;
  int L = 2;
  std::vector<int> r_values{20, 40, 80};
  std::uint64_t n = 100'000;
  std::uint64_t profile_samples = 200'000;  // per orbit
  int q_escape_radius = 0;                  // 0: max(64 L, 32 max r)
  SummaryAxis axis = SummaryAxis::trace;
  int bootstrap_reps = 200;
  std::uint64_t seed = 1;
};

std::vector<TvStudyRow> tv_scaling_study(const TvStudyOptions& opt);

}  // namespace torvac
