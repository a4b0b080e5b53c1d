#pragma once

// Harmonic measure of the box C = B(0, L) in Z^d, its capacity, and the law Q
// of a walk started from the normalized harmonic measure and stopped at its
// last visit to C.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "torvac/lattice.hpp"
#include "torvac/rng.hpp"

namespace torvac {

struct HarmonicProfile {
  int d = 0;
  int L = 0;
  int escape_radius = 0;
  std::uint64_t samples_per_orbit = 0;
  std::vector<Coords> points;      // sphere S(0, L), row-major order
  std::vector<int> orbit;          // orbit id per point
  std::vector<double> weights;     // e_C estimates (pooled per orbit)
  std::vector<double> weight_se;   // standard errors
  std::vector<double> mu;          // normalized weights
  double capacity = 0.0;
  double capacity_se = 0.0;
  double capacity_upper = 0.0;  // bias- and noise-adjusted upper bound on cap(C)
  double bias_bound = 0.0;  // upper bound on the downward bias of each weight

  // e_C(z) for z in C: 0 off the sphere; throws when z lies outside C.
  double e(const Coords& z) const;
  std::size_t point_index(const Coords& z) const;  // throws when z is not on the sphere
  std::string to_ndjson() const;                   // one record per sphere point
};

// Sup-norm sphere S(0, L) in Z^d in row-major order ({0} when L = 0).
std::vector<Coords> box_boundary(int d, int L);
// Orbit of z under coordinate permutations and sign flips: sorted |z_j|.
std::vector<int> orbit_key(const Coords& z, int d);

int default_escape_radius(int d, int L);

// Estimates P_z[no return to C] for one representative per orbit with
// `samples_per_orbit` walks (truncated at exit from B(0, R)).
HarmonicProfile harmonic_measure(int d, int L, int escape_radius, std::uint64_t samples_per_orbit,
                                 std::uint64_t seed);

// Exact box profile from supplied per-point weights (used for testing).
HarmonicProfile profile_from_weights(int d, int L, std::vector<double> weights);

struct QPath {
  std::vector<Coords> sites;  // w_0 .. w_T
};

struct QSampleSet {
  std::vector<QPath> paths;
  double bias_bound = 0.0;  // probability that a post-escape return would extend a path
};

// Plain-stepping sampler: start ~ mu_C, walk until exit from B(0, R),
// keep the path up to the last visit to C.
QSampleSet sample_Q(const HarmonicProfile& profile, int escape_radius, std::size_t n, std::uint64_t seed);

struct QSummary {
  std::size_t entry = 0;       // index into profile.points
  std::uint32_t trace = 0;     // number of distinct cells of C visited
  std::int64_t duration = -1;  // T; -1 when unknown (jumps taken after a return)
  bool returned = false;       // the walk came back to C after time 0
};

struct QSummarySet {
  std::vector<QSummary> summaries;
  double bias_bound = 0.0;
};

// Accelerated sampler of (entry, trace size, duration) under Q.
QSummarySet sample_Q_summaries(const HarmonicProfile& profile, int escape_radius, std::size_t n,
                               std::uint64_t seed);

// cap^{-1} e(w_0) (2d)^{-T} e(w_T); throws on endpoints off the sphere or
// non-adjacent consecutive sites.
double q_path_probability(const HarmonicProfile& profile, const QPath& path);

}  // namespace torvac
