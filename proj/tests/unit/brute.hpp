#pragma once

// Literal brute-force versions of the vacant-set predicates for tiny tori.

#include <algorithm>
#include <cmath>
#include <deque>
#include <vector>

#include "torvac/lattice.hpp"

namespace brute {

using torvac::CellIndex;
using torvac::Coords;
using torvac::TorusGeometry;

inline CellIndex at(const TorusGeometry& g, Coords c) {
  for (int j = 0; j < g.dim(); ++j) c[static_cast<std::size_t>(j)] = g.wrap(c[static_cast<std::size_t>(j)]);
  return g.index(c);
}

inline int offsets(int N, double beta) {
  // Integers m with m < N^beta.
  const double lim = std::pow(static_cast<double>(N), beta);
  int m = 0;
  while (m < lim * (1 - 1e-12)) ++m;
  return m;
}

inline bool V(const TorusGeometry& g, const std::vector<std::uint8_t>& vac, double K, double beta) {
  const int l = static_cast<int>(std::floor(K * std::log(static_cast<double>(g.side()))));
  const int M = offsets(g.side(), beta);
  for (CellIndex x = 0; x < g.cell_count(); ++x)
    for (int j = 0; j < g.dim(); ++j) {
      bool ok = false;
      for (int m = 0; m < M && !ok; ++m) {
        ok = true;
        for (int k = 0; k <= l; ++k) {
          Coords c = g.coords(x);
          c[static_cast<std::size_t>(j)] += m + k;
          ok = ok && vac[at(g, c)];
        }
      }
      if (!ok) return false;
    }
  return true;
}

// Sizes of nearest-neighbor vacant components, with a label per cell (-1 on visited cells).
inline std::vector<int> labels(const TorusGeometry& g, const std::vector<std::uint8_t>& vac) {
  std::vector<int> lab(g.cell_count(), -1);
  int next = 0;
  for (CellIndex s = 0; s < g.cell_count(); ++s) {
    if (!vac[s] || lab[s] >= 0) continue;
    std::deque<CellIndex> q{s};
    lab[s] = next;
    while (!q.empty()) {
      const CellIndex v = q.front();
      q.pop_front();
      for (int j = 0; j < g.dim(); ++j)
        for (int sg : {-1, 1}) {
          Coords c = g.coords(v);
          c[static_cast<std::size_t>(j)] += sg;
          const CellIndex w = at(g, c);
          if (vac[w] && lab[w] < 0) {
            lab[w] = next;
            q.push_back(w);
          }
        }
    }
    ++next;
  }
  return lab;
}

// Smallest window of the circle covering all marked positions, minus one.
inline int extent(const std::vector<int>& positions, int n) {
  int best = n - 1;
  for (int start = 0; start < n; ++start)
    for (int len = 0; len < n; ++len) {
      bool covers = true;
      for (int p : positions) covers = covers && ((p - start + n) % n) <= len;
      if (covers) {
        best = std::min(best, len);
        break;
      }
    }
  return positions.empty() ? 0 : best;
}

inline bool U(const TorusGeometry& g, const std::vector<std::uint8_t>& vac, double K) {
  const int n = g.side();
  const int thr = static_cast<int>(std::floor(K * std::log(static_cast<double>(n))));
  for (int a = 0; a < g.dim(); ++a)
    for (int b = a + 1; b < g.dim(); ++b)
      for (CellIndex base = 0; base < g.cell_count(); ++base) {
        const Coords bc = g.coords(base);
        if (bc[static_cast<std::size_t>(a)] != 0 || bc[static_cast<std::size_t>(b)] != 0) continue;
        // In-plane labelling by repeated min-propagation.
        std::vector<int> lab(static_cast<std::size_t>(n * n), -1);
        auto cell = [&](int p, int q) {
          Coords c = bc;
          c[static_cast<std::size_t>(a)] = p;
          c[static_cast<std::size_t>(b)] = q;
          return at(g, c);
        };
        for (int i = 0; i < n * n; ++i)
          if (vac[cell(i / n, i % n)]) lab[static_cast<std::size_t>(i)] = i;
        for (bool changed = true; changed;) {
          changed = false;
          for (int i = 0; i < n * n; ++i) {
            if (lab[static_cast<std::size_t>(i)] < 0) continue;
            const int p = i / n, q = i % n;
            const int nb[4] = {((p + 1) % n) * n + q, ((p + n - 1) % n) * n + q, p * n + (q + 1) % n, p * n + (q + n - 1) % n};
            for (int w : nb)
              if (lab[static_cast<std::size_t>(w)] >= 0 && lab[static_cast<std::size_t>(w)] < lab[static_cast<std::size_t>(i)]) {
                lab[static_cast<std::size_t>(i)] = lab[static_cast<std::size_t>(w)];
                changed = true;
              }
          }
        }
        int large = 0;
        for (int root = 0; root < n * n; ++root) {
          std::vector<int> ps, qs;
          for (int i = 0; i < n * n; ++i)
            if (lab[static_cast<std::size_t>(i)] == root) {
              ps.push_back(i / n);
              qs.push_back(i % n);
            }
          if (ps.empty()) continue;
          if (std::max(extent(ps, n), extent(qs, n)) >= thr) ++large;
        }
        if (large > 1) return false;
      }
  return true;
}

inline bool C(const TorusGeometry& g, const std::vector<std::uint8_t>& vac, double K, CellIndex x) {
  const int rho = static_cast<int>(std::floor(K * std::log(static_cast<double>(g.side()))));
  if (!vac[x]) return false;
  if (rho == 0) return true;
  const Coords c0 = g.coords(x);
  for (int a = 0; a < g.dim(); ++a)
    for (int b = a + 1; b < g.dim(); ++b) {
      std::vector<std::pair<int, int>> stack{{0, 0}};
      std::vector<std::pair<int, int>> seen{{0, 0}};
      while (!stack.empty()) {
        const auto [p, q] = stack.back();
        stack.pop_back();
        if (std::max(std::abs(p), std::abs(q)) == rho) return true;
        for (auto [dp, dq] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
          const std::pair<int, int> nxt{p + dp, q + dq};
          if (std::find(seen.begin(), seen.end(), nxt) != seen.end()) continue;
          Coords c = c0;
          c[static_cast<std::size_t>(a)] += nxt.first;
          c[static_cast<std::size_t>(b)] += nxt.second;
          if (!vac[at(g, c)]) continue;
          seen.push_back(nxt);
          stack.push_back(nxt);
        }
      }
    }
  return false;
}

// Largest m such that some closed sup-ball of radius m is fully vacant (0 if none).
inline int ball(const TorusGeometry& g, const std::vector<std::uint8_t>& vac) {
  int best = 0;
  for (int m = 1; 2 * m + 1 <= g.side(); ++m) {
    bool found = false;
    for (CellIndex x = 0; x < g.cell_count() && !found; ++x) {
      bool all = true;
      for (CellIndex y = 0; y < g.cell_count() && all; ++y)
        if (torvac::linf_dist(g, g.coords(x), g.coords(y)) <= m) all = vac[y] != 0;
      found = all;
    }
    if (!found) break;
    best = m;
  }
  return best;
}

}  // namespace brute
