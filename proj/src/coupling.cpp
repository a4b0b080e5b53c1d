#include "torvac/coupling.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "torvac/cube_exit.hpp"
#include "torvac/walk.hpp"

namespace torvac {

namespace {

constexpr std::size_t kBlock = 1024;

int wrap(int a, int N) {
  a %= N;
  return a < 0 ? a + N : a;
}

// Representative of a - b in [-N/2, N/2).
int centered(int a, int b, int N) {
  int v = wrap(a - b, N);
  if (v >= N - N / 2) v -= N;
  return v;
}

int circ_dist(const Coords& x, const Coords& c, int d, int N) {
  int m = 0;
  for (int j = 0; j < d; ++j) {
    const int v = wrap(x[static_cast<std::size_t>(j)] - c[static_cast<std::size_t>(j)], N);
    m = std::max(m, std::min(v, N - v));
  }
  return m;
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t k) {
  CounterRng r(seed, 0x5eed0000ULL + k);
  return r();
}

}  // namespace

int CouplingGeometry::default_N(int r) {
  const int n = 4 * r + 8;
  return n + (n & 1);
}

CouplingGeometry CouplingGeometry::standard(int d, int L, int r, int N) {
  CouplingGeometry g;
  g.d = d;
  g.N = N;
  g.L = L;
  g.r = r;
  Coords x1{}, x2{};
  x2[0] = N / 2;
  g.centers = {x1, x2};
  for (int j = 0; j < d; ++j) g.start[static_cast<std::size_t>(j)] = N / 2;
  g.start[0] = N / 4;
  return g;
}

void CouplingGeometry::validate() const {
  if (d < 3 || d > kMaxDim) throw ConfigError("coupling geometry: d must be in [3, 8]");
  if (L < 0) throw ConfigError("coupling geometry: L must be >= 0");
  if (r < 1 || r < 10 * L) throw ConfigError("coupling geometry: need r >= 10 L and r >= 1");
  if (centers.empty()) throw ConfigError("coupling geometry: at least one center required");
  const auto m = static_cast<long long>(std::max<std::size_t>(2, centers.size()));
  if (static_cast<long long>(N) < m * (2LL * r + 3)) throw ConfigError("coupling geometry: N too small for the halos");
  for (std::size_t i = 0; i < centers.size(); ++i) {
    for (std::size_t k = i + 1; k < centers.size(); ++k)
      if (circ_dist(centers[i], centers[k], d, N) < 2 * r + 3)
        throw ConfigError("coupling geometry: centers closer than 2 r + 3");
    if (circ_dist(start, centers[i], d, N) <= r) throw ConfigError("coupling geometry: start lies inside a halo");
  }
}

std::map<Coords, std::uint64_t> QuwSample::strata() const {
  std::map<Coords, std::uint64_t> m;
  for (const auto& s : summaries) ++m[s.exit];
  return m;
}

QuwSample sample_Quw(const CouplingGeometry& geometry, std::size_t n, std::uint64_t seed) {
  geometry.validate();
  const int d = geometry.d, N = geometry.N, L = geometry.L, r = geometry.r;
  const auto M = static_cast<int>(geometry.centers.size());
  const JumpKit& kit = JumpKit::for_dimension(d);
  const std::vector<Coords> sphere = box_boundary(d, L);
  const int wrap_cap = (N - 1) / 2;  // the jump cube must not meet itself across the torus
  const auto side = static_cast<std::size_t>(2 * L + 1);
  std::size_t core_cells = 1;
  for (int j = 0; j < d; ++j) core_cells *= side;

  QuwSample out;
  out.geometry = geometry;
  out.summaries.resize(n);
  const auto blocks = static_cast<std::ptrdiff_t>((n + kBlock - 1) / kBlock);
  std::uint64_t jumps = 0, steps = 0;
#pragma omp parallel for schedule(dynamic, 1) reduction(+ : jumps, steps)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    CounterRng rng(seed, static_cast<std::uint64_t>(b));
    SmallChoiceStream choice(rng, static_cast<std::uint32_t>(2 * d));
    std::vector<std::uint32_t> seen(core_cells, 0);
    std::uint32_t stamp = 0;
    Coords x{};

    auto move = [&](int allowed) -> bool {
      const CubeExitTable* table = kit.largest_within(std::min(allowed, wrap_cap));
      if (table) {
        const Coords& off = table->sample(rng);
        for (int j = 0; j < d; ++j)
          x[static_cast<std::size_t>(j)] = wrap(x[static_cast<std::size_t>(j)] + off[static_cast<std::size_t>(j)], N);
        ++jumps;
        return true;
      }
      const std::uint32_t c = choice.next();
      int& v = x[c >> 1];
      v += (c & 1u) ? 1 : -1;
      if (v == N) v = 0;
      if (v < 0) v = N - 1;
      ++steps;
      return false;
    };

    const std::size_t lo = static_cast<std::size_t>(b) * kBlock, hi = std::min(n, lo + kBlock);
    for (std::size_t i = lo; i < hi; ++i) {
      x = geometry.start;
      // Until the first entrance into a core.
      int hit = -1;
      for (;;) {
        int allowed = wrap_cap;
        for (int k = 0; k < M; ++k) {
          const int dk = circ_dist(x, geometry.centers[static_cast<std::size_t>(k)], d, N);
          if (dk <= L) {
            hit = k;
            break;
          }
          allowed = std::min(allowed, dk - L);
        }
        if (hit >= 0) break;
        move(allowed);
      }
      const Coords& c = geometry.centers[static_cast<std::size_t>(hit)];
      ExcursionSummary& s = out.summaries[i];
      s.center = hit;
      Coords e{};
      for (int j = 0; j < d; ++j)
        e[static_cast<std::size_t>(j)] = centered(x[static_cast<std::size_t>(j)], c[static_cast<std::size_t>(j)], N);
      s.entry = static_cast<std::size_t>(std::lower_bound(sphere.begin(), sphere.end(), e) - sphere.begin());

      // Until the departure from the halo; only this core can be visited.
      ++stamp;
      std::uint32_t trace = 0;
      std::int64_t t = 0, last = 0;
      bool jumped = false, jumped_before_last = false;
      for (;;) {
        const int dist = circ_dist(x, c, d, N);
        if (dist > r) break;
        if (dist <= L) {
          std::size_t idx = 0;
          for (int j = 0; j < d; ++j)
            idx = idx * side +
                  static_cast<std::size_t>(centered(x[static_cast<std::size_t>(j)], c[static_cast<std::size_t>(j)], N) + L);
          if (seen[idx] != stamp) {
            seen[idx] = stamp;
            ++trace;
          }
          last = t;
          jumped_before_last = jumped;
        }
        if (move(std::min(dist - L, r + 1 - dist)))
          jumped = true;
        else
          ++t;
      }
      s.trace = trace;
      s.duration = jumped_before_last ? -1 : last;
      for (int j = 0; j < d; ++j)
        s.exit[static_cast<std::size_t>(j)] = centered(x[static_cast<std::size_t>(j)], c[static_cast<std::size_t>(j)], N);
    }
  }
  out.jumps = jumps;
  out.steps = steps;
  return out;
}

const char* to_string(SummaryAxis a) {
  switch (a) {
    case SummaryAxis::entry: return "entry";
    case SummaryAxis::trace: return "trace";
    case SummaryAxis::joint: return "joint";
  }
  return "?";
}

SummaryAxis parse_axis(const std::string& s) {
  if (s == "entry") return SummaryAxis::entry;
  if (s == "trace") return SummaryAxis::trace;
  if (s == "joint") return SummaryAxis::joint;
  throw ConfigError("unknown summary axis '" + s + "'");
}

int trace_bucket(std::uint32_t trace) {
  if (trace == 0) throw std::invalid_argument("trace size must be >= 1");
  return static_cast<int>(std::bit_width(trace - 1));
}

int trace_bucket_count(int d, int L) {
  std::uint32_t cells = 1;
  for (int j = 0; j < d; ++j) cells *= static_cast<std::uint32_t>(2 * L + 1);
  return trace_bucket(cells) + 1;
}

SummaryHistogram SummaryHistogram::empty(SummaryAxis axis, int d, int L) {
  SummaryHistogram h;
  h.axis = axis;
  h.d = d;
  h.L = L;
  const std::size_t entries = box_boundary(d, L).size();
  const auto buckets = static_cast<std::size_t>(trace_bucket_count(d, L));
  switch (axis) {
    case SummaryAxis::entry: h.counts.assign(entries, 0); break;
    case SummaryAxis::trace: h.counts.assign(buckets, 0); break;
    case SummaryAxis::joint: h.counts.assign(entries * buckets, 0); break;
  }
  return h;
}

std::size_t SummaryHistogram::atom(std::size_t entry, std::uint32_t trace) const {
  const auto bucket = static_cast<std::size_t>(trace_bucket(trace));
  switch (axis) {
    case SummaryAxis::entry: return entry;
    case SummaryAxis::trace: return bucket;
    case SummaryAxis::joint: return entry * static_cast<std::size_t>(trace_bucket_count(d, L)) + bucket;
  }
  return 0;
}

void SummaryHistogram::add(std::size_t entry, std::uint32_t trace) {
  const std::size_t a = atom(entry, trace);
  if (a >= counts.size()) throw std::out_of_range("summary outside the atom set");
  ++counts[a];
  ++total;
}

bool SummaryHistogram::same_atoms(const SummaryHistogram& o) const {
  return axis == o.axis && d == o.d && L == o.L && counts.size() == o.counts.size();
}

void SummaryHistogram::merge(const SummaryHistogram& o) {
  if (!same_atoms(o)) throw std::invalid_argument("histograms have different atoms");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
  total += o.total;
}

SummaryHistogram histogram(const QuwSample& s, SummaryAxis axis) {
  auto h = SummaryHistogram::empty(axis, s.geometry.d, s.geometry.L);
  for (const auto& e : s.summaries) h.add(e.entry, e.trace);
  return h;
}

SummaryHistogram histogram_for_stratum(const QuwSample& s, SummaryAxis axis, const Coords& exit) {
  auto h = SummaryHistogram::empty(axis, s.geometry.d, s.geometry.L);
  for (const auto& e : s.summaries)
    if (e.exit == exit) h.add(e.entry, e.trace);
  return h;
}

SummaryHistogram histogram(const QSummarySet& s, const HarmonicProfile& profile, SummaryAxis axis) {
  auto h = SummaryHistogram::empty(axis, profile.d, profile.L);
  for (const auto& e : s.summaries) h.add(e.entry, e.trace);
  return h;
}

double tv_raw(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("distributions have different atoms");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return s;
}

namespace {

std::vector<double> normalized(const std::vector<std::uint64_t>& c, std::uint64_t total) {
  std::vector<double> p(c.size(), 0.0);
  if (total == 0) return p;
  for (std::size_t i = 0; i < c.size(); ++i) p[i] = static_cast<double>(c[i]) / static_cast<double>(total);
  return p;
}

// Mean of |D + Z| for Z ~ N(0, s^2), D >= 0.
double folded_mean(double D, double s) {
  const double z = D / s;
  return s * std::sqrt(2.0 / std::numbers::pi) * std::exp(-0.5 * z * z) + D * std::erf(z / std::numbers::sqrt2);
}

// Moment inversion of the folded normal, atom by atom.
double corrected_tv(const std::vector<double>& p, std::uint64_t np, const std::vector<double>& q, std::uint64_t nq) {
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double obs = std::abs(p[i] - q[i]);
    const double var = p[i] * (1.0 - p[i]) / static_cast<double>(np) + q[i] * (1.0 - q[i]) / static_cast<double>(nq);
    if (var <= 0.0) {
      sum += obs;
      continue;
    }
    const double s = std::sqrt(var);
    if (obs <= folded_mean(0.0, s)) continue;
    double lo = 0.0, hi = obs;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (folded_mean(mid, s) < obs ? lo : hi) = mid;
    }
    sum += 0.5 * (lo + hi);
  }
  return sum;
}

std::vector<std::uint64_t> multinomial(const std::vector<double>& p, std::uint64_t n, CounterRng& rng) {
  std::vector<std::uint64_t> out(p.size(), 0);
  double rest = 1.0;
  std::uint64_t left = n;
  for (std::size_t i = 0; i + 1 < p.size() && left > 0; ++i) {
    if (p[i] <= 0.0) continue;
    const double prob = std::clamp(p[i] / rest, 0.0, 1.0);
    std::binomial_distribution<std::uint64_t> bin(left, prob);
    out[i] = bin(rng);
    left -= out[i];
    rest -= p[i];
    if (rest <= 0.0) break;
  }
  if (!p.empty()) out.back() += left;
  return out;
}

}  // namespace

TvEstimate tv_distance(const SummaryHistogram& p, const SummaryHistogram& q, int bootstrap_reps, std::uint64_t seed) {
  if (!p.same_atoms(q)) throw std::invalid_argument("histograms have different atoms");
  if (p.total == 0 || q.total == 0) throw std::invalid_argument("empty histogram");
  const auto ph = normalized(p.counts, p.total), qh = normalized(q.counts, q.total);
  TvEstimate e;
  e.n_p = p.total;
  e.n_q = q.total;
  e.raw = tv_raw(ph, qh);
  e.bias_corrected = std::min(e.raw, corrected_tv(ph, p.total, qh, q.total));
  e.ci = {e.bias_corrected, e.bias_corrected};
  if (bootstrap_reps > 0) {
    std::vector<double> reps(static_cast<std::size_t>(bootstrap_reps));
#pragma omp parallel for schedule(static)
    for (int b = 0; b < bootstrap_reps; ++b) {
      CounterRng rng(seed, static_cast<std::uint64_t>(b));
      const auto pb = normalized(multinomial(ph, p.total, rng), p.total);
      const auto qb = normalized(multinomial(qh, q.total, rng), q.total);
      reps[static_cast<std::size_t>(b)] = std::min(tv_raw(pb, qb), corrected_tv(pb, p.total, qb, q.total));
    }
    std::sort(reps.begin(), reps.end());
    auto pick = [&](double f) {
      const auto k = static_cast<std::size_t>(std::clamp(f * (bootstrap_reps - 1), 0.0, bootstrap_reps - 1.0));
      return reps[k];
    };
    // Basic bootstrap: resampling from the plug-in law inflates the distance,
    // so the percentile band is reflected around the estimate.
    const double t = e.bias_corrected;
    e.ci = {std::max(0.0, 2.0 * t - pick(0.975)), std::max(0.0, 2.0 * t - pick(0.025))};
  }
  return e;
}

MaximalCoupling maximal_coupling(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size() || p.empty()) throw std::invalid_argument("distributions need the same nonempty atom set");
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw std::invalid_argument("negative probability");
    sp += p[i];
    sq += q[i];
  }
  if (std::abs(sp - 1.0) > 1e-9 || std::abs(sq - 1.0) > 1e-9) throw std::invalid_argument("distribution not normalized");
  MaximalCoupling m;
  m.atoms = p.size();
  m.joint.assign(m.atoms * m.atoms, 0.0);
  double excess = 0.0;
  for (std::size_t i = 0; i < m.atoms; ++i) {
    m.joint[i * m.atoms + i] = std::min(p[i], q[i]);
    excess += std::max(0.0, p[i] - q[i]);
  }
  m.mismatch = 0.5 * tv_raw(p, q);
  if (excess > 0.0)
    for (std::size_t i = 0; i < m.atoms; ++i) {
      const double a = std::max(0.0, p[i] - q[i]);
      if (a == 0.0) continue;
      for (std::size_t j = 0; j < m.atoms; ++j) {
        const double b = std::max(0.0, q[j] - p[j]);
        if (b > 0.0) m.joint[i * m.atoms + j] += a * b / excess;
      }
    }
  return m;
}

std::vector<TvStudyRow> tv_scaling_study(const TvStudyOptions& opt) {
  if (opt.r_values.empty()) throw ConfigError("coupling study needs at least one r");
  const int r_max = *std::max_element(opt.r_values.begin(), opt.r_values.end());
  const int q_radius = opt.q_escape_radius > 0 ? opt.q_escape_radius : std::max(64 * opt.L, 32 * r_max);
  if (q_radius < 64 * opt.L) throw ConfigError("Q escape radius must be >= 64 L");
  const HarmonicProfile profile = harmonic_measure(opt.d, opt.L, std::max(default_escape_radius(opt.d, opt.L), 10 * opt.L),
                                                   opt.profile_samples, sub_seed(opt.seed, 0));
  const QSummarySet qs = sample_Q_summaries(profile, q_radius, opt.n, sub_seed(opt.seed, 1));
  const SummaryHistogram hq = histogram(qs, profile, opt.axis);

  std::vector<TvStudyRow> rows;
  for (std::size_t k = 0; k < opt.r_values.size(); ++k) {
    const int r = opt.r_values[k];
    const int N = CouplingGeometry::default_N(r);
    const CouplingGeometry g = CouplingGeometry::standard(opt.d, opt.L, r, N);
    const QuwSample s = sample_Quw(g, opt.n, sub_seed(opt.seed, 2 + k));
    TvStudyRow row;
    row.L = opt.L;
    row.r = r;
    row.N = N;
    row.n = opt.n;
    row.tv = tv_distance(histogram(s, opt.axis), hq, opt.bootstrap_reps, sub_seed(opt.seed, 1000 + k));
    // A truncated Q-side sample differs from Q on an event of probability at
    // most the sampler bias, moving the distance by at most twice that.
    row.q_bias_bound = 2.0 * qs.bias_bound;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace torvac
