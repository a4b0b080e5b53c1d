#pragma once

// Simple random walk on Z^dim with explicit stop rules.

#include <cstdint>
#include <vector>

#include "torvac/lattice.hpp"
#include "torvac/rng.hpp"

namespace torvac {

// Sup-norm box in Z^dim; a single point is a box of radius 0.
struct ZdBox {
  Coords center{};
  int radius = 0;
};

struct ZdStopRule {
  std::vector<ZdBox> hit;        // stop on entering the union (empty: never)
  int exit_radius = -1;          // stop once |X|_inf > exit_radius (negative: never)
  std::uint64_t max_moves = 0;   // mandatory cap on moves (steps plus jumps)
  bool record_path = false;      // refused together with accelerate
  bool accelerate = false;       // replace long stretches by exact cube-exit jumps
  bool check_start = true;       // stop at move 0 when the start is already in the hit set
};

enum class ZdOutcome { hit, exited, max_moves };

struct ZdWalkResult {
  ZdOutcome outcome = ZdOutcome::max_moves;
  Coords end{};
  std::uint64_t moves = 0;   // unit steps plus jumps
  bool jumped = false;       // when false, moves is the exact elapsed time
  std::vector<Coords> path;  // only with record_path
};

bool zd_in_boxes(const std::vector<ZdBox>& boxes, const Coords& x, int dim);
// Sup-distance from x to the union (0 inside); large when the list is empty.
int zd_dist_to_boxes(const std::vector<ZdBox>& boxes, const Coords& x, int dim);

ZdWalkResult run_zd_walk(int dim, const Coords& start, const ZdStopRule& rule, CounterRng& rng);

const char* to_string(ZdOutcome o);

}  // namespace torvac
