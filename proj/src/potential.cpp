#include "torvac/potential.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "torvac/lattice.hpp"
#include "torvac/cube_exit.hpp"
#include "torvac/walk.hpp"
#include "torvac/zd_walk.hpp"

namespace torvac {

double bessel_i0_scaled(double s) {
  if (s < 0) s = -s;
  if (s < 600.0) return std::exp(-s) * boost::math::cyl_bessel_i(0, s);
  // Hankel expansion: sum_k ((2k-1)!!)^2 / (k! (8s)^k).
  double term = 1.0, sum = 1.0;
  for (int k = 1; k <= 8; ++k) {
    const double a = 2.0 * k - 1.0;
    term *= a * a / (k * 8.0 * s);
    sum += term;
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * s);
}

ReturnProbability q_nu_quadrature(int nu, double tolerance) {
  if (nu <= 2) throw RecurrentError("simple random walk on Z^" + std::to_string(nu) + " is recurrent");
  const double v = nu;
  auto f = [v](double t) {
    const double b = bessel_i0_scaled(t / v);
    return std::pow(b, v);
  };
  double err_head = 0.0, err_tail = 0.0, l1 = 0.0;
  const double head = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, v, 30, tolerance, &err_head);
  boost::math::quadrature::exp_sinh<double> tail_rule;
  const double tail = tail_rule.integrate([&](double s) { return f(v + s); }, tolerance, &err_tail, &l1);
  ReturnProbability q;
  q.nu = nu;
  q.green = head + tail;
  q.value = 1.0 - 1.0 / q.green;
  const double abs_err = std::abs(err_head) + std::abs(err_tail) * std::max(1.0, std::abs(tail)) +
                         4.0 * std::numeric_limits<double>::epsilon() * q.green;
  q.error = abs_err / (q.green * q.green);
  q.method = ReturnMethod::quadrature;
  return q;
}

double green_asymptotic_constant(int nu) {
  const double v = nu;
  return 0.5 * v * boost::math::tgamma(v / 2.0 - 1.0) * std::pow(std::numbers::pi, -v / 2.0);
}

ReturnProbability ReturnEstimate::as_return_probability() const {
  ReturnProbability q;
  q.nu = nu;
  q.value = value;
  q.green = 1.0 / (1.0 - value);
  q.error = sigma;
  q.method = ReturnMethod::montecarlo;
  return q;
}

namespace {

constexpr std::uint64_t kBlock = 4096;

}  // namespace

ReturnEstimate q_nu_montecarlo(int nu, int escape_radius, std::uint64_t n_samples, std::uint64_t seed) {
  if (nu <= 2) throw RecurrentError("simple random walk on Z^" + std::to_string(nu) + " is recurrent");
  if (nu > kMaxDim) throw std::invalid_argument("Monte Carlo return probability supports nu <= 8");
  if (escape_radius < 2) throw std::invalid_argument("escape radius must be >= 2");
  if (n_samples == 0) throw std::invalid_argument("need at least one sample");
  (void)JumpKit::for_dimension(nu);

  ZdStopRule rule;
  rule.hit = {ZdBox{Coords{}, 0}};
  rule.exit_radius = escape_radius;
  rule.max_moves = 1'000'000'000ULL;
  rule.accelerate = true;

  const auto blocks = static_cast<std::ptrdiff_t>((n_samples + kBlock - 1) / kBlock);
  std::uint64_t returns = 0, escapes = 0, exhausted = 0;
#pragma omp parallel for schedule(dynamic, 1) reduction(+ : returns, escapes, exhausted)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    CounterRng rng(seed, static_cast<std::uint64_t>(b));
    const std::uint64_t lo = static_cast<std::uint64_t>(b) * kBlock;
    const std::uint64_t hi = std::min(n_samples, lo + kBlock);
    for (std::uint64_t i = lo; i < hi; ++i) {
      // The first step from 0 goes to a uniform neighbor; by symmetry e_1 suffices.
      Coords start{};
      start[0] = 1;
      const ZdWalkResult r = run_zd_walk(nu, start, rule, rng);
      returns += r.outcome == ZdOutcome::hit;
      escapes += r.outcome == ZdOutcome::exited;
      exhausted += r.outcome == ZdOutcome::max_moves;
    }
  }
  ReturnEstimate e;
  e.nu = nu;
  e.escape_radius = escape_radius;
  e.samples = n_samples;
  e.returns = returns;
  e.escapes = escapes;
  e.exhausted = exhausted;
  const double n = static_cast<double>(n_samples);
  e.value = static_cast<double>(returns) / n;
  e.sigma = std::sqrt(std::max(e.value * (1.0 - e.value), 1.0 / n) / n);
  e.wilson = stats::wilson(returns, n_samples);
  // From any exit point the chance to reach 0 is at most g(y) / g(0) <= g(y),
  // bounded by twice the leading asymptotics at sup-distance R + 1.
  const double reach = 2.0 * green_asymptotic_constant(nu) * std::pow(escape_radius + 1.0, 2.0 - nu);
  e.bias_bound = (static_cast<double>(escapes + exhausted) / n) * std::min(1.0, reach);
  return e;
}

bool return_values_agree(const ReturnProbability& quad, const ReturnEstimate& mc, double k) {
  const double s = std::sqrt(mc.sigma * mc.sigma + quad.error * quad.error);
  return mc.value <= quad.value + k * s && quad.value <= mc.value + mc.bias_bound + k * s;
}

double q_N_exact(int k, int N) {
  const TorusGeometry g(k, N);
  if (g.cell_count() > 10000) throw std::invalid_argument("exact q_N limited to 10^4 states");
  std::vector<double> p(g.cell_count(), 0.0), nxt(g.cell_count(), 0.0);
  Coords e1{};
  e1[0] = 1;
  p[g.index(e1)] = 1.0;
  const double w = 1.0 / (2.0 * k);
  double hit = 0.0;
  const std::uint64_t horizon = static_cast<std::uint64_t>(N) * static_cast<std::uint64_t>(N);
  // H_0 < N^2: steps 1, ..., N^2 - 1.
  for (std::uint64_t s = 1; s < horizon; ++s) {
    std::fill(nxt.begin(), nxt.end(), 0.0);
    for (CellIndex i = 0; i < g.cell_count(); ++i) {
      if (p[i] == 0.0) continue;
      for (int j = 0; j < k; ++j) {
        nxt[g.neighbor(i, j, +1)] += w * p[i];
        nxt[g.neighbor(i, j, -1)] += w * p[i];
      }
    }
    hit += nxt[0];
    nxt[0] = 0.0;
    p.swap(nxt);
  }
  return hit;
}

FiniteReturn q_N_finite(int d, int m, int N, std::uint64_t n_samples, std::uint64_t seed) {
  if (m < 1 || m > d - 3) throw std::invalid_argument("q_N needs 1 <= m <= d - 3");
  if (N < 2) throw std::invalid_argument("q_N needs N >= 2");
  if (n_samples == 0) throw std::invalid_argument("need at least one sample");
  const int k = d - m;
  const TorusGeometry g(k, N);
  const std::uint64_t horizon = static_cast<std::uint64_t>(N) * static_cast<std::uint64_t>(N);
  Coords e1{};
  e1[0] = 1;

  const auto blocks = static_cast<std::ptrdiff_t>((n_samples + kBlock - 1) / kBlock);
  std::uint64_t hits = 0;
#pragma omp parallel for schedule(dynamic, 1) reduction(+ : hits)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    CounterRng rng(seed, static_cast<std::uint64_t>(b));
    SmallChoiceStream choice(rng, static_cast<std::uint32_t>(2 * k));
    const std::uint64_t lo = static_cast<std::uint64_t>(b) * kBlock;
    const std::uint64_t hi = std::min(n_samples, lo + kBlock);
    for (std::uint64_t i = lo; i < hi; ++i) {
      WalkerState w(g, e1);
      for (std::uint64_t s = 1; s < horizon; ++s) {
        w.move(choice.next());
        if (w.index() == 0) {
          ++hits;
          break;
        }
      }
    }
  }
  FiniteReturn out;
  out.d = d;
  out.m = m;
  out.N = N;
  out.samples = n_samples;
  out.estimate = static_cast<double>(hits) / static_cast<double>(n_samples);
  out.ci = stats::wilson(hits, n_samples);
  if (g.cell_count() <= 10000) out.exact = q_N_exact(k, N);
  return out;
}

double mu_of(int d, double q) { return 49.0 * (2.0 / d + (1.0 - 2.0 / d) * q); }

ConstantsRow constants_row(int d, double tolerance) {
  if (d < 5) throw std::invalid_argument("constants are defined for d >= 5");
  const ReturnProbability q = q_nu_quadrature(d - 2, tolerance);
  ConstantsRow row;
  row.d = d;
  row.q = q.value;
  row.q_error = q.error;
  row.mu = mu_of(d, q.value);
  row.mu_lo = mu_of(d, q.value - q.error);
  row.mu_hi = mu_of(d, q.value + q.error);
  if (row.mu < 1.0) {
    row.lambda0 = std::log(7.0) - 0.25 * std::log(row.mu);
    row.c0 = 8.0 * d / std::log(1.0 / row.mu);
  }
  return row;
}

ConstantsReport constants_report(const std::vector<int>& d_values, int d0_search_limit, double tolerance) {
  ConstantsReport rep;
  rep.tolerance = tolerance;
  for (int d : d_values) rep.rows.push_back(constants_row(d, tolerance));
  for (int d = 5; d <= d0_search_limit && !(rep.d0_lo && rep.d0_hi); ++d) {
    const ConstantsRow row = constants_row(d, tolerance);
    if (!rep.d0_lo && row.mu_lo < 1.0) rep.d0_lo = d;
    if (!rep.d0_hi && row.mu_hi < 1.0) rep.d0_hi = d;
  }
  return rep;
}

}  // namespace torvac
