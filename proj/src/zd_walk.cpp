#include "torvac/zd_walk.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "torvac/cube_exit.hpp"

namespace torvac {

bool zd_in_boxes(const std::vector<ZdBox>& boxes, const Coords& x, int dim) {
  for (const auto& b : boxes)
    if (zd_linf_dist(x, b.center, dim) <= b.radius) return true;
  return false;
}

int zd_dist_to_boxes(const std::vector<ZdBox>& boxes, const Coords& x, int dim) {
  int best = std::numeric_limits<int>::max() / 2;
  for (const auto& b : boxes) best = std::min(best, std::max(0, zd_linf_dist(x, b.center, dim) - b.radius));
  return best;
}

const char* to_string(ZdOutcome o) {
  switch (o) {
    case ZdOutcome::hit: return "hit";
    case ZdOutcome::exited: return "exited";
    case ZdOutcome::max_moves: return "max_moves";
  }
  return "?";
}

ZdWalkResult run_zd_walk(int dim, const Coords& start, const ZdStopRule& rule, CounterRng& rng) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("Z^d walk: dimension out of range");
  if (rule.max_moves == 0) throw std::invalid_argument("Z^d walk: max_moves must be set");
  if (rule.record_path && rule.accelerate) throw std::invalid_argument("Z^d walk: cannot record a jumped path");

  const JumpKit* kit = rule.accelerate ? &JumpKit::for_dimension(dim) : nullptr;
  ZdWalkResult res;
  Coords x = start;
  if (rule.record_path) res.path.push_back(x);

  auto stopped = [&]() -> bool {
    if (!rule.hit.empty() && zd_in_boxes(rule.hit, x, dim)) {
      res.outcome = ZdOutcome::hit;
      return true;
    }
    if (rule.exit_radius >= 0 && zd_linf_norm(x, dim) > rule.exit_radius) {
      res.outcome = ZdOutcome::exited;
      return true;
    }
    return false;
  };

  if (rule.check_start && stopped()) {
    res.end = x;
    return res;
  }
  SmallChoiceStream choice(rng, static_cast<std::uint32_t>(2 * dim));
  while (res.moves < rule.max_moves) {
    const CubeExitTable* table = nullptr;
    if (kit) {
      int allowed = rule.hit.empty() ? std::numeric_limits<int>::max() : zd_dist_to_boxes(rule.hit, x, dim);
      if (rule.exit_radius >= 0) allowed = std::min(allowed, rule.exit_radius + 1 - zd_linf_norm(x, dim));
      table = kit->largest_within(allowed);
    }
    if (table) {
      const Coords& off = table->sample(rng);
      for (int j = 0; j < dim; ++j) x[static_cast<std::size_t>(j)] += off[static_cast<std::size_t>(j)];
      res.jumped = true;
    } else {
      const std::uint32_t c = choice.next();
      x[c >> 1] += (c & 1u) ? 1 : -1;
    }
    ++res.moves;
    if (rule.record_path) res.path.push_back(x);
    if (stopped()) {
      res.end = x;
      return res;
    }
  }
  res.outcome = ZdOutcome::max_moves;
  res.end = x;
  return res;
}

}  // namespace torvac
