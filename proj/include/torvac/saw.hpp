#pragma once

// Exact counts of self-avoiding paths on Z^2 under 8-neighbor (star) adjacency.

#include <cstdint>

namespace torvac {

inline constexpr int kMaxStarSawLength = 12;

// Number of n-step star self-avoiding paths from the origin, 1 <= n <= 12.
// Uses the dihedral symmetry of the first step and of the axis/diagonal the
// path follows before it first leaves it; subtrees run in parallel.
std::uint64_t star_saw_count(int n);

// Plain depth-first enumeration over all eight first steps.
std::uint64_t star_saw_count_reference(int n);

}  // namespace torvac
