#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>

#include "torvac/coupling.hpp"
#include "torvac/experiments.hpp"
#include "torvac/saw.hpp"

namespace torvac {

namespace {

// Brute-force references. Each one follows the definition literally and is
// only meant for tori with a few hundred cells.

int offsets_below(int N, double beta) {
  int m = 0;
  while (static_cast<double>(m) < std::pow(static_cast<double>(N), beta) * (1.0 - 1e-12)) ++m;
  return m;
}

Coords shifted(const TorusGeometry& g, Coords c, int axis, long long by) {
  c[static_cast<std::size_t>(axis)] = g.wrap(c[static_cast<std::size_t>(axis)] + by);
  return c;
}

bool ref_V(const TorusGeometry& g, std::span<const std::uint8_t> vac, double K, double beta) {
  const int l = log_length(K, g.side());
  const int offsets = offsets_below(g.side(), beta);
  for (CellIndex x = 0; x < g.cell_count(); ++x)
    for (int j = 0; j < g.dim(); ++j) {
      bool found = false;
      for (int m = 0; m < offsets && !found; ++m) {
        bool all = true;
        for (int k = 0; k <= l && all; ++k) all = vac[g.index(shifted(g, g.coords(x), j, m + k))] != 0;
        found = all;
      }
      if (!found) return false;
    }
  return true;
}

// In-plane components of the vacant set in every coordinate plane.
bool ref_U(const TorusGeometry& g, std::span<const std::uint8_t> vac, double K) {
  const int n = g.side();
  const int threshold = log_length(K, n);
  for (int a = 0; a < g.dim(); ++a)
    for (int b = a + 1; b < g.dim(); ++b)
      for (CellIndex base = 0; base < g.cell_count(); ++base) {
        const Coords bc = g.coords(base);
        if (bc[static_cast<std::size_t>(a)] != 0 || bc[static_cast<std::size_t>(b)] != 0) continue;
        auto at = [&](int p, int q) {
          Coords c = bc;
          c[static_cast<std::size_t>(a)] = p;
          c[static_cast<std::size_t>(b)] = q;
          return g.index(c);
        };
        std::vector<int> comp(static_cast<std::size_t>(n * n), -1);
        int large = 0, next = 0;
        for (int s = 0; s < n * n; ++s) {
          if (comp[static_cast<std::size_t>(s)] >= 0 || !vac[at(s / n, s % n)]) continue;
          std::vector<int> stack{s}, members;
          comp[static_cast<std::size_t>(s)] = next;
          while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            members.push_back(v);
            const int p = v / n, q = v % n;
            const int nb[4] = {((p + 1) % n) * n + q, ((p + n - 1) % n) * n + q, p * n + (q + 1) % n,
                               p * n + (q + n - 1) % n};
            for (int w : nb)
              if (comp[static_cast<std::size_t>(w)] < 0 && vac[at(w / n, w % n)]) {
                comp[static_cast<std::size_t>(w)] = next;
                stack.push_back(w);
              }
          }
          ++next;
          // Circular extent along each plane axis: n minus the longest empty gap.
          int diam = 0;
          for (int axis = 0; axis < 2; ++axis) {
            std::vector<std::uint8_t> hit(static_cast<std::size_t>(n), 0);
            for (int v : members) hit[static_cast<std::size_t>(axis == 0 ? v / n : v % n)] = 1;
            int gap = 0;
            for (int start = 0; start < n; ++start) {
              int len = 0;
              while (len < n && !hit[static_cast<std::size_t>((start + len) % n)]) ++len;
              gap = std::max(gap, len);
            }
            diam = std::max(diam, n - gap - 1);
          }
          if (diam >= threshold) ++large;
        }
        if (large >= 2) return false;
      }
  return true;
}

// Flood fill by repeated relaxation over the (2 rho + 1)^2 window of each plane.
bool ref_C(const TorusGeometry& g, std::span<const std::uint8_t> vac, double K, CellIndex x) {
  if (!vac[x]) return false;
  const int rho = log_length(K, g.side());
  if (rho == 0) return true;
  const Coords c = g.coords(x);
  const int m = 2 * rho + 1;
  for (int a = 0; a < g.dim(); ++a)
    for (int b = a + 1; b < g.dim(); ++b) {
      auto open = [&](int p, int q) {
        Coords y = shifted(g, shifted(g, c, a, p), b, q);
        return vac[g.index(y)] != 0;
      };
      std::vector<std::uint8_t> reach(static_cast<std::size_t>(m * m), 0);
      reach[static_cast<std::size_t>(rho * m + rho)] = 1;
      bool changed = true;
      while (changed) {
        changed = false;
        for (int p = -rho; p <= rho; ++p)
          for (int q = -rho; q <= rho; ++q) {
            auto& cell = reach[static_cast<std::size_t>((p + rho) * m + q + rho)];
            if (cell || !open(p, q)) continue;
            const int nb[4][2] = {{p + 1, q}, {p - 1, q}, {p, q + 1}, {p, q - 1}};
            for (const auto& s : nb) {
              if (std::abs(s[0]) > rho || std::abs(s[1]) > rho) continue;
              if (reach[static_cast<std::size_t>((s[0] + rho) * m + s[1] + rho)]) {
                cell = 1;
                changed = true;
                break;
              }
            }
          }
      }
      for (int p = -rho; p <= rho; ++p)
        for (int q = -rho; q <= rho; ++q)
          if ((std::abs(p) == rho || std::abs(q) == rho) && reach[static_cast<std::size_t>((p + rho) * m + q + rho)])
            return true;
    }
  return false;
}

std::vector<std::size_t> ref_component_roots(const TorusGeometry& g, std::span<const std::uint8_t> vac) {
  std::vector<std::size_t> parent(g.cell_count());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (CellIndex x = 0; x < g.cell_count(); ++x) {
    if (!vac[x]) continue;
    for (int j = 0; j < g.dim(); ++j) {
      const CellIndex y = g.index(shifted(g, g.coords(x), j, 1));
      if (vac[y]) parent[find(x)] = find(y);
    }
  }
  for (CellIndex x = 0; x < g.cell_count(); ++x) parent[x] = find(x);
  return parent;
}

int ref_ball(const TorusGeometry& g, std::span<const std::uint8_t> vac) {
  int best = 0;
  for (CellIndex x = 0; x < g.cell_count(); ++x) {
    int nearest = g.side();
    for (CellIndex y = 0; y < g.cell_count(); ++y)
      if (!vac[y]) nearest = std::min(nearest, linf_dist(g, g.coords(x), g.coords(y)));
    best = std::max(best, nearest - 1);
  }
  return best;
}

std::string mask_string(std::span<const std::uint8_t> vac) {
  std::string s;
  for (auto v : vac) s.push_back(v ? '1' : '0');
  return s;
}

class Checker {
 public:
  explicit Checker(ValidateReport& rep) : rep_(&rep) {}
  void operator()(bool ok, const std::string& check, const std::string& witness) {
    ++rep_->checks;
    if (!ok && rep_->failures.size() < 50) rep_->failures.push_back(check + ": " + witness);
  }

 private:
  ValidateReport* rep_;
};

void check_mask_kernels(const ValidateKernels& k, const TorusGeometry& g, const std::vector<std::uint8_t>& vac,
                        double K, double beta, const std::string& tag, Checker& check) {
  const std::string w = tag + " d=" + std::to_string(g.dim()) + " N=" + std::to_string(g.side()) +
                        " K=" + fmt(K) + " mask=" + mask_string(vac);
  const int l = log_length(K, g.side());
  const int window = static_cast<int>(std::floor(std::pow(static_cast<double>(g.side()), beta) + 1e-12));
  if (l + window + 1 <= g.side()) check(k.detect_V(g, vac, K, beta).holds == ref_V(g, vac, K, beta), "V matches brute force", w);
  check(k.detect_U(g, vac, K).holds == ref_U(g, vac, K), "U matches brute force", w);
  if (2 * l + 1 <= g.side())
    for (CellIndex x = 0; x < g.cell_count(); x += 1 + g.cell_count() / 17)
      check(k.detect_C(g, vac, K, x) == ref_C(g, vac, K, x), "C matches brute force", w + " x=" + std::to_string(x));
  if (std::any_of(vac.begin(), vac.end(), [](auto v) { return v == 0; }))
    check(k.largest_ball(g, vac) == ref_ball(g, vac), "largest ball matches brute force", w);

  std::vector<std::uint32_t> fv(g.cell_count());
  for (CellIndex x = 0; x < g.cell_count(); ++x) fv[x] = vac[x] ? kNeverVisited : 0;
  const VacantComponents comp = k.components(OccupancyGrid(g, 1, std::move(fv)), 0);
  const auto roots = ref_component_roots(g, vac);
  bool same = comp.label.size() == g.cell_count();
  for (CellIndex x = 0; same && x < g.cell_count(); ++x) {
    if (!vac[x]) {
      same = comp.label[x] == kNoComponent;
      continue;
    }
    // Two vacant cells share a label exactly when they share a root.
    for (CellIndex y = x + 1; same && y < g.cell_count(); ++y)
      if (vac[y]) same = (comp.label[x] == comp.label[y]) == (roots[x] == roots[y]);
  }
  check(same, "components match brute force", w);
}

void check_grid(const ValidateKernels& k, const OccupancyGrid& grid, std::uint64_t t, const std::string& tag,
                Checker& check) {
  const TorusGeometry& g = grid.geometry();
  const auto vac = vacancy_mask(grid, t, false);
  const std::string w = tag + " t=" + std::to_string(t);
  check(vac == vacancy_mask(grid, t, true), "vacancy mask serial equals parallel", w);

  const VacantComponents comp = k.components(grid, t);
  const auto roots = ref_component_roots(g, vac);
  bool partition = comp.label.size() == g.cell_count();
  std::vector<std::uint64_t> sizes(comp.sizes.size(), 0);
  for (CellIndex x = 0; partition && x < g.cell_count(); ++x) {
    if (!vac[x]) {
      partition = comp.label[x] == kNoComponent;
      continue;
    }
    if (comp.label[x] >= comp.sizes.size()) {
      partition = false;
      break;
    }
    ++sizes[comp.label[x]];
    for (int j = 0; j < g.dim() && partition; ++j) {
      const CellIndex y = g.index(shifted(g, g.coords(x), j, 1));
      if (vac[y]) partition = comp.label[y] == comp.label[x];
    }
  }
  if (partition) {
    // Same number of classes as the union-find reference.
    std::vector<std::size_t> r;
    for (CellIndex x = 0; x < g.cell_count(); ++x)
      if (vac[x]) r.push_back(roots[x]);
    std::sort(r.begin(), r.end());
    partition = static_cast<std::size_t>(std::unique(r.begin(), r.end()) - r.begin()) == comp.count() &&
                sizes == comp.sizes;
  }
  check(partition, "components partition the vacant set", w);
  check(comp.vacant_count() == static_cast<std::uint64_t>(std::count(vac.begin(), vac.end(), 1)),
        "component sizes sum to the vacant count", w);

  const double K = 0.5, beta = 0.5;
  const int n = g.side();
  if (log_length(K, n) + static_cast<int>(std::floor(std::sqrt(static_cast<double>(n)) + 1e-12)) + 1 <= n &&
      2 * log_length(K, n) + 1 <= n) {
    const auto probes = probe_lattice(g, std::max(1, n / 4));
    const EventReport ev = detect_G(grid, t, K, beta, probes);
    check(!ev.G || (ev.V.holds && ev.U.holds), "G implies V and U", w);
    check(!ev.G || ev.C_outside_giant == 0, "on G every C probe lies in the giant", w);
    check(ev.V.holds == k.detect_V(g, vac, K, beta).holds, "V on grid equals V on mask", w);
  }
  LocalFunctionSpec phi0;
  phi0.kind = LocalKind::phi0;
  phi0.L = 0;
  check(std::abs(gamma_average(grid, phi0, t) - vacant_fraction(grid, t)) < 1e-12, "phi0 average equals vacant fraction", w);
}

}  // namespace

ValidateKernels ValidateKernels::library() {
  ValidateKernels k;
  k.detect_V = [](const TorusGeometry& g, std::span<const std::uint8_t> v, double K, double beta) {
    return detect_V_mask(g, v, K, beta);
  };
  k.detect_U = [](const TorusGeometry& g, std::span<const std::uint8_t> v, double K) { return detect_U_mask(g, v, K); };
  k.detect_C = [](const TorusGeometry& g, std::span<const std::uint8_t> v, double K, CellIndex x) {
    PlanarConnector conn(g, log_length(K, g.side()));
    return conn(v, x);
  };
  k.components = [](const OccupancyGrid& grid, std::uint64_t t) { return vacant_components(grid, t); };
  k.largest_ball = [](const TorusGeometry& g, std::span<const std::uint8_t> v) { return largest_vacant_ball_mask(g, v); };
  return k;
}

ValidateReport run_validation(const ValidateKernels& kernels, std::size_t random_cases, std::uint64_t seed) {
  ValidateReport rep;
  Checker check(rep);
  CounterRng rng(seed, 0x7a11da7e);

  // Random Bernoulli masks on small tori.
  for (std::size_t c = 0; c < random_cases; ++c) {
    const int d = 3;
    const int N = 4 + static_cast<int>(rng.below(5));
    const TorusGeometry g(d, N);
    const double p = 0.2 + 0.7 * rng.uniform();
    std::vector<std::uint8_t> vac(g.cell_count());
    for (auto& v : vac) v = rng.uniform() < p ? 1 : 0;
    const double K = 0.4 + 1.2 * rng.uniform();
    const double beta = 0.3 + 0.5 * rng.uniform();
    check_mask_kernels(kernels, g, vac, K, beta, "mask case " + std::to_string(c), check);
    ++rep.cases;
  }

  // Walk grids: structural invariants at several times.
  for (std::size_t c = 0; c < std::max<std::size_t>(1, random_cases / 10); ++c) {
    const int d = 3 + static_cast<int>(c % 2);
    const TorusGeometry g(d, d == 3 ? 8 : 5);
    const WalkConfig wc{g, 1.5, std::nullopt, seed, c};
    const OccupancyGrid grid = run_walk(wc);
    const std::string tag = "walk case " + std::to_string(c);
    for (double frac : {0.0, 0.25, 0.5, 1.0})
      check_grid(kernels, grid, static_cast<std::uint64_t>(frac * static_cast<double>(grid.total_steps())), tag, check);
    check(run_walk(wc).first_visit().size() == grid.first_visit().size() &&
              std::equal(grid.first_visit().begin(), grid.first_visit().end(), run_walk(wc).first_visit().begin()),
          "walk is deterministic", tag);

    const auto tmp = std::filesystem::temp_directory_path() /
                     ("torvac-validate-" + hex64(seed) + "-" + std::to_string(c) + ".grid");
    write_grid(tmp.string(), grid);
    const OccupancyGrid back = read_grid(tmp.string());
    std::filesystem::remove(tmp);
    check(back.geometry() == g && back.total_steps() == grid.total_steps() &&
              std::equal(grid.first_visit().begin(), grid.first_visit().end(), back.first_visit().begin()),
          "grid file round trip", tag);
    const auto vac = vacancy_mask(grid, grid.total_steps() / 2);
    check(largest_vacant_ball_mask(g, vac, true) == largest_vacant_ball_mask(g, vac, false) ||
              std::all_of(vac.begin(), vac.end(), [](auto v) { return v != 0; }),
          "largest ball serial equals parallel", tag);
    ++rep.cases;
  }

  // Distances and couplings on random distributions.
  for (std::size_t c = 0; c < std::max<std::size_t>(1, random_cases / 10); ++c) {
    const std::size_t m = 2 + rng.below(6);
    std::vector<double> p(m), q(m);
    for (auto& v : p) v = rng.uniform();
    for (auto& v : q) v = rng.uniform();
    const double sp = std::accumulate(p.begin(), p.end(), 0.0), sq = std::accumulate(q.begin(), q.end(), 0.0);
    for (auto& v : p) v /= sp;
    for (auto& v : q) v /= sq;
    const std::string tag = "distribution case " + std::to_string(c);
    const double tv = tv_raw(p, q);
    check(tv >= 0.0 && tv <= 2.0 + 1e-12, "distance in [0, 2]", tag);
    check(std::abs(tv_raw(p, p)) < 1e-15, "distance to itself is 0", tag);
    const MaximalCoupling mc = maximal_coupling(p, q);
    check(std::abs(mc.mismatch - 0.5 * tv) < 1e-12, "maximal coupling mismatch is half the distance", tag);
    bool marginals = true;
    for (std::size_t i = 0; i < m; ++i) {
      double row = 0, col = 0;
      for (std::size_t j = 0; j < m; ++j) {
        row += mc.at(i, j);
        col += mc.at(j, i);
      }
      marginals = marginals && std::abs(row - p[i]) < 1e-12 && std::abs(col - q[i]) < 1e-12;
    }
    check(marginals, "maximal coupling has the right marginals", tag);
    ++rep.cases;
  }

  // Self-avoiding walk counts against the plain enumeration and the 7^n bound.
  for (int n = 1; n <= 6; ++n) {
    const auto fast = star_saw_count(n), slow = star_saw_count_reference(n);
    check(fast == slow, "star SAW count matches enumeration", "n=" + std::to_string(n));
    check(static_cast<double>(fast) <= 8.0 * std::pow(7.0, n - 1), "star SAW count within 8 7^(n-1)",
          "n=" + std::to_string(n));
  }
  ++rep.cases;
  return rep;
}

CommandResult cmd_validate(const ExperimentConfig& cfg) {
  const auto cases = cfg.params["cases"].get<std::size_t>();
  const std::string grid_path = cfg.params["grid"];
  const ValidateKernels kernels = ValidateKernels::library();
  ValidateReport rep = run_validation(kernels, cases, cfg.seed);
  if (!grid_path.empty()) {
    const OccupancyGrid grid = read_grid(grid_path);
    Checker check(rep);
    for (double frac : {0.0, 0.5, 1.0})
      check_grid(kernels, grid, static_cast<std::uint64_t>(frac * static_cast<double>(grid.total_steps())),
                 "file " + grid_path, check);
    ++rep.cases;
  }
  CommandResult res;
  res.table = Table({"cases", "checks", "failures", "config_hash"});
  res.table.add_row({fmt(static_cast<std::uint64_t>(rep.cases)), fmt(static_cast<std::uint64_t>(rep.checks)),
                     fmt(static_cast<std::uint64_t>(rep.failures.size())), hex64(cfg.hash())});
  RunRecord rec;
  rec.config_hash = cfg.hash();
  rec.metrics = {{"cases", static_cast<double>(rep.cases)}, {"checks", static_cast<double>(rep.checks)},
                 {"failures", static_cast<double>(rep.failures.size())}};
  res.records.push_back(rec);
  res.failures = rep.failures;
  res.summary["checks"] = rep.checks;
  return res;
}

}  // namespace torvac
