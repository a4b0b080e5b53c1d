#include "torvac/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "json.hpp"
#include "torvac/cube_exit.hpp"
#include "torvac/potential.hpp"
#include "torvac/zd_walk.hpp"

namespace torvac {

namespace {

constexpr std::uint64_t kBlock = 4096;
constexpr std::uint64_t kMoveCap = 4'000'000'000ULL;

void check_dims(int d, int L) {
  if (d < 3 || d > kMaxDim) throw std::invalid_argument("harmonic measure needs 3 <= d <= 8");
  if (L < 0) throw std::invalid_argument("box radius must be >= 0");
}

// Chance that a walk at sup-distance >= R + 1 from 0 ever reaches B(0, L) is
// sum_y g(x - y) e(y) <= cap * 2 a_d (R + 1 - L)^{2-d}; this returns the
// per-unit-capacity factor.
double reach_per_capacity(int d, int L, int R) {
  return 2.0 * green_asymptotic_constant(d) * std::pow(R + 1.0 - L, 2.0 - d);
}

void fill_normalization(HarmonicProfile& p) {
  p.capacity = 0.0;
  for (double w : p.weights) p.capacity += w;
  p.mu.assign(p.weights.size(), 0.0);
  if (p.capacity > 0.0)
    for (std::size_t i = 0; i < p.weights.size(); ++i) p.mu[i] = p.weights[i] / p.capacity;
}

void assign_orbits(HarmonicProfile& p) {
  std::map<std::vector<int>, int> ids;
  p.orbit.clear();
  for (const auto& z : p.points) {
    auto [it, fresh] = ids.try_emplace(orbit_key(z, p.d), static_cast<int>(ids.size()));
    (void)fresh;
    p.orbit.push_back(it->second);
  }
}

}  // namespace

std::vector<Coords> box_boundary(int d, int L) {
  check_dims(d, L);
  auto pts = zd_sphere(d, L);
  std::sort(pts.begin(), pts.end());
  return pts;
}

std::vector<int> orbit_key(const Coords& z, int d) {
  std::vector<int> k(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) k[static_cast<std::size_t>(j)] = std::abs(z[static_cast<std::size_t>(j)]);
  std::sort(k.begin(), k.end());
  return k;
}

int default_escape_radius(int d, int L) {
  if (d == 3) return std::max(64 * L, 1024);
  return std::max(64 * L, 256);
}

std::size_t HarmonicProfile::point_index(const Coords& z) const {
  if (zd_linf_norm(z, d) != L) throw std::invalid_argument("point is not on the boundary sphere");
  const auto it = std::lower_bound(points.begin(), points.end(), z);
  if (it == points.end() || *it != z) throw std::invalid_argument("point is not on the boundary sphere");
  return static_cast<std::size_t>(it - points.begin());
}

double HarmonicProfile::e(const Coords& z) const {
  const int n = zd_linf_norm(z, d);
  if (n > L) throw std::invalid_argument("point lies outside C");
  if (n < L) return 0.0;
  return weights[point_index(z)];
}

std::string HarmonicProfile::to_ndjson() const {
  std::string out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    nlohmann::json j;
    j["z"] = std::vector<int>(points[i].begin(), points[i].begin() + d);
    j["orbit"] = orbit[i];
    j["e"] = weights[i];
    j["se"] = weight_se[i];
    j["mu"] = mu[i];
    j["L"] = L;
    j["d"] = d;
    j["escape_radius"] = escape_radius;
    out += j.dump();
    out += '\n';
  }
  return out;
}

HarmonicProfile profile_from_weights(int d, int L, std::vector<double> weights) {
  check_dims(d, L);
  HarmonicProfile p;
  p.d = d;
  p.L = L;
  p.points = box_boundary(d, L);
  if (weights.size() != p.points.size()) throw std::invalid_argument("one weight per boundary point required");
  for (double w : weights)
    if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("weights must lie in [0, 1]");
  p.weights = std::move(weights);
  p.weight_se.assign(p.weights.size(), 0.0);
  assign_orbits(p);
  fill_normalization(p);
  p.capacity_upper = p.capacity;
  return p;
}

HarmonicProfile harmonic_measure(int d, int L, int escape_radius, std::uint64_t samples_per_orbit,
                                 std::uint64_t seed) {
  check_dims(d, L);
  if (escape_radius < 2 || escape_radius < 10 * L)
    throw std::invalid_argument("escape radius must be >= max(2, 10 L)");
  if (samples_per_orbit == 0) throw std::invalid_argument("need at least one sample per orbit");
  (void)JumpKit::for_dimension(d);

  HarmonicProfile p;
  p.d = d;
  p.L = L;
  p.escape_radius = escape_radius;
  p.samples_per_orbit = samples_per_orbit;
  p.points = box_boundary(d, L);
  assign_orbits(p);
  const int n_orbits = *std::max_element(p.orbit.begin(), p.orbit.end()) + 1;
  std::vector<Coords> rep(static_cast<std::size_t>(n_orbits));
  std::vector<std::size_t> orbit_size(static_cast<std::size_t>(n_orbits), 0);
  for (std::size_t i = p.points.size(); i-- > 0;) {
    rep[static_cast<std::size_t>(p.orbit[i])] = p.points[i];
    ++orbit_size[static_cast<std::size_t>(p.orbit[i])];
  }

  ZdStopRule rule;
  rule.hit = {ZdBox{Coords{}, L}};
  rule.exit_radius = escape_radius;
  rule.max_moves = kMoveCap;
  rule.accelerate = true;
  rule.check_start = false;

  const std::uint64_t blocks = (samples_per_orbit + kBlock - 1) / kBlock;
  const auto tasks = static_cast<std::ptrdiff_t>(blocks * static_cast<std::uint64_t>(n_orbits));
  std::vector<std::uint64_t> escapes(static_cast<std::size_t>(tasks), 0);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t t = 0; t < tasks; ++t) {
    const auto o = static_cast<std::uint64_t>(t) / blocks;
    const auto b = static_cast<std::uint64_t>(t) % blocks;
    CounterRng rng(seed, (o << 32) | b);
    const std::uint64_t lo = b * kBlock, hi = std::min(samples_per_orbit, lo + kBlock);
    std::uint64_t esc = 0;
    for (std::uint64_t i = lo; i < hi; ++i) {
      Coords x = rep[o];
      const auto c = static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(2 * d)));
      x[c >> 1] += (c & 1u) ? 1 : -1;
      if (zd_linf_norm(x, d) <= L) continue;
      const ZdWalkResult r = run_zd_walk(d, x, rule, rng);
      esc += r.outcome == ZdOutcome::exited;
    }
    escapes[static_cast<std::size_t>(t)] = esc;
  }

  std::vector<double> value(static_cast<std::size_t>(n_orbits)), se(static_cast<std::size_t>(n_orbits));
  const double n = static_cast<double>(samples_per_orbit);
  double cap_var = 0.0, max_escape = 0.0;
  for (int o = 0; o < n_orbits; ++o) {
    std::uint64_t esc = 0;
    for (std::uint64_t b = 0; b < blocks; ++b) esc += escapes[static_cast<std::size_t>(static_cast<std::uint64_t>(o) * blocks + b)];
    const double v = static_cast<double>(esc) / n;
    value[static_cast<std::size_t>(o)] = v;
    se[static_cast<std::size_t>(o)] = std::sqrt(v * (1.0 - v) / n);
    const double sz = static_cast<double>(orbit_size[static_cast<std::size_t>(o)]);
    cap_var += sz * sz * se[static_cast<std::size_t>(o)] * se[static_cast<std::size_t>(o)];
    max_escape = std::max(max_escape, v);
  }
  for (std::size_t i = 0; i < p.points.size(); ++i) {
    p.weights.push_back(value[static_cast<std::size_t>(p.orbit[i])]);
    p.weight_se.push_back(se[static_cast<std::size_t>(p.orbit[i])]);
  }
  fill_normalization(p);
  p.capacity_se = std::sqrt(cap_var);
  // Each true weight is at most its estimate plus escape * reach * cap, so
  // cap <= (estimate + 3 se) / (1 - |S| reach) whenever |S| reach < 1.
  const double reach = reach_per_capacity(d, L, escape_radius);
  const double shrink = 1.0 - static_cast<double>(p.points.size()) * reach;
  p.capacity_upper = shrink > 0.0 ? (p.capacity + 3.0 * p.capacity_se) / shrink
                                  : static_cast<double>(p.points.size());
  p.capacity_upper = std::min(p.capacity_upper, static_cast<double>(p.points.size()));
  p.bias_bound = std::min(1.0, max_escape * reach * p.capacity_upper);
  return p;
}

namespace {

void check_profile(const HarmonicProfile& profile, int escape_radius) {
  if (profile.points.empty() || !(profile.capacity > 0.0)) throw std::invalid_argument("profile has no capacity");
  if (escape_radius < 2 || escape_radius <= profile.L) throw std::invalid_argument("escape radius too small");
}

}  // namespace

QSampleSet sample_Q(const HarmonicProfile& profile, int escape_radius, std::size_t n, std::uint64_t seed) {
  check_profile(profile, escape_radius);
  const int d = profile.d, L = profile.L;
  const AliasTable start_law(profile.mu);
  QSampleSet out;
  out.paths.resize(n);
  const auto blocks = static_cast<std::ptrdiff_t>((n + kBlock - 1) / kBlock);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    CounterRng rng(seed, static_cast<std::uint64_t>(b));
    SmallChoiceStream choice(rng, static_cast<std::uint32_t>(2 * d));
    std::vector<Coords> buf;
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock, hi = std::min(n, lo + kBlock);
    for (std::size_t i = lo; i < hi; ++i) {
      buf.clear();
      Coords x = profile.points[start_law.sample(rng)];
      buf.push_back(x);
      std::size_t last = 0;
      for (std::uint64_t s = 0; s < kMoveCap; ++s) {
        const std::uint32_t c = choice.next();
        x[c >> 1] += (c & 1u) ? 1 : -1;
        const int norm = zd_linf_norm(x, d);
        if (norm > escape_radius) break;
        buf.push_back(x);
        if (norm <= L) last = buf.size() - 1;
      }
      out.paths[i].sites.assign(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(last + 1));
    }
  }
  out.bias_bound = std::min(1.0, reach_per_capacity(d, L, escape_radius) * profile.capacity_upper);
  return out;
}

QSummarySet sample_Q_summaries(const HarmonicProfile& profile, int escape_radius, std::size_t n,
                               std::uint64_t seed) {
  check_profile(profile, escape_radius);
  const int d = profile.d, L = profile.L;
  const JumpKit& kit = JumpKit::for_dimension(d);
  const AliasTable start_law(profile.mu);
  const auto side = static_cast<std::size_t>(2 * L + 1);
  std::size_t box_cells = 1;
  for (int j = 0; j < d; ++j) box_cells *= side;

  QSummarySet out;
  out.summaries.resize(n);
  const auto blocks = static_cast<std::ptrdiff_t>((n + kBlock - 1) / kBlock);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    CounterRng rng(seed, static_cast<std::uint64_t>(b));
    SmallChoiceStream choice(rng, static_cast<std::uint32_t>(2 * d));
    std::vector<std::uint32_t> seen(box_cells, 0);
    std::uint32_t stamp = 0;
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock, hi = std::min(n, lo + kBlock);
    for (std::size_t i = lo; i < hi; ++i) {
      ++stamp;
      QSummary& s = out.summaries[i];
      s.entry = start_law.sample(rng);
      Coords x = profile.points[s.entry];
      std::uint32_t trace = 0;
      auto visit = [&]() {
        std::size_t idx = 0;
        for (int j = 0; j < d; ++j) idx = idx * side + static_cast<std::size_t>(x[static_cast<std::size_t>(j)] + L);
        if (seen[idx] != stamp) {
          seen[idx] = stamp;
          ++trace;
        }
      };
      visit();
      std::uint64_t t = 0, last = 0;
      bool jumped = false, jumped_before_last = false;
      for (std::uint64_t m = 0; m < kMoveCap; ++m) {
        const int norm = zd_linf_norm(x, d);
        const CubeExitTable* table = kit.largest_within(std::min(norm - L, escape_radius + 1 - norm));
        if (table) {
          const Coords& off = table->sample(rng);
          for (int j = 0; j < d; ++j) x[static_cast<std::size_t>(j)] += off[static_cast<std::size_t>(j)];
          jumped = true;
        } else {
          const std::uint32_t c = choice.next();
          x[c >> 1] += (c & 1u) ? 1 : -1;
          ++t;
        }
        const int after = zd_linf_norm(x, d);
        if (after > escape_radius) break;
        if (after <= L) {
          visit();
          last = t;
          jumped_before_last = jumped;
          s.returned = true;
        }
      }
      s.trace = trace;
      s.duration = jumped_before_last ? -1 : static_cast<std::int64_t>(last);
    }
  }
  out.bias_bound = std::min(1.0, reach_per_capacity(d, L, escape_radius) * profile.capacity_upper);
  return out;
}

double q_path_probability(const HarmonicProfile& profile, const QPath& path) {
  if (path.sites.empty()) throw std::invalid_argument("empty path");
  const int d = profile.d;
  for (std::size_t k = 1; k < path.sites.size(); ++k)
    if (!zd_adjacent(path.sites[k - 1], path.sites[k], d))
      throw std::invalid_argument("consecutive path sites are not nearest neighbors");
  const double e0 = profile.weights[profile.point_index(path.sites.front())];
  const double eT = profile.weights[profile.point_index(path.sites.back())];
  const double T = static_cast<double>(path.sites.size() - 1);
  return e0 * std::pow(2.0 * d, -T) * eT / profile.capacity;
}

}  // namespace torvac
