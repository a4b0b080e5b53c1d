#pragma once

// Exact exit distributions of simple random walk from the center of a
// sup-norm cube, used to replace long stretches of unit steps by one jump.
//
// A walk at x whose sup-distance to every target is at least rho stays inside
// B(x, rho - 1) until it first reaches the sphere S(x, rho), and it cannot
// meet a target before then. The exit point is drawn from the tabulated law;
// the elapsed time is not tracked.
//
// The law is computed by separation of variables. With m = 2 rho - 1 and
// s_k(y) = sqrt(2 / (m + 1)) sin(pi k y / (m + 1)) on {1..m}, the killed Green
// function of each transverse sine mode k' solves a 1-d problem in the normal
// direction whose value next to the face is d / cosh(rho w(k')), where
// cosh w = 1 + 2 sum_j sin^2(pi k_j / (2 (m + 1))). Hence the probability
// to exit through one face at transverse position y' is
//   P(y') = 1/2 sum_{k'} prod_j s_{k_j}(rho) s_{k_j}(y_j) / cosh(rho w(k')),
// evaluated as one sine contraction per transverse axis. All 2d faces carry
// the same law, so a jump draws a face uniformly and a point from one table.

#include <memory>
#include <span>
#include <vector>

#include "torvac/lattice.hpp"
#include "torvac/rng.hpp"

namespace torvac {

class CubeExitTable {
 public:
  CubeExitTable(int dim, int radius);

  int dim() const { return dim_; }
  int radius() const { return radius_; }
  // Law on one face, indexed row-major over the dim - 1 transverse offsets.
  std::span<const double> face_probabilities() const { return face_probs_; }
  std::size_t face_size() const { return face_probs_.size(); }
  // Exit offset for face f in [0, 2 dim) (axis f / 2, sign + for odd f).
  Coords offset(int face, std::size_t index) const;
  // Mass of the unnormalized law over all faces; 1 up to rounding.
  double total_mass() const { return total_mass_; }

  Coords sample(CounterRng& rng) const {
    const int face = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * dim_)));
    return offset(face, alias_.sample(rng));
  }

 private:
  int dim_;
  int radius_;
  double total_mass_ = 0.0;
  std::vector<double> face_probs_;
  AliasTable alias_;
};

// Tables for one dimension at several radii, sized to a per-table budget.
class JumpKit {
 public:
  // Built once per dimension on first use; thread-safe.
  static const JumpKit& for_dimension(int dim);

  explicit JumpKit(int dim, std::size_t max_face_entries = 300'000);

  int dim() const { return dim_; }
  int max_radius() const { return tables_.empty() ? 0 : tables_.back()->radius(); }
  // Largest table with radius <= allowed, or nullptr when allowed < 2.
  const CubeExitTable* largest_within(int allowed) const {
    if (allowed < 2 || tables_.empty()) return nullptr;
    if (allowed >= static_cast<int>(by_allowed_.size())) return tables_.back().get();
    return by_allowed_[static_cast<std::size_t>(allowed)];
  }

 private:
  int dim_;
  std::vector<std::unique_ptr<CubeExitTable>> tables_;
  std::vector<const CubeExitTable*> by_allowed_;
};

}  // namespace torvac
