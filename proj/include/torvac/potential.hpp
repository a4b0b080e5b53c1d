#pragma once

// Return probabilities of simple random walk on Z^nu, the finite-torus
// return probability q_N, and the large-dimension constants built from them.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "torvac/stats.hpp"

namespace torvac {

class RecurrentError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class ReturnMethod { quadrature, montecarlo };

struct ReturnProbability {
  int nu = 0;
  double value = 0.0;  // q = 1 - 1/green
  double green = 0.0;  // g_nu(0)
  double error = 0.0;  // quadrature: error bound on q; Monte Carlo: standard error
  ReturnMethod method = ReturnMethod::quadrature;
};

// exp(-s) I_0(s) for s >= 0.
double bessel_i0_scaled(double s);

// g_nu(0) = int_0^inf (e^{-s} I_0(s))^nu dt, s = t / nu, split at t = nu.
ReturnProbability q_nu_quadrature(int nu, double tolerance = 1e-12);

// Constant a_nu of the Green function asymptotics g(x) ~ a_nu |x|^{2-nu}.
double green_asymptotic_constant(int nu);

struct ReturnEstimate {
  int nu = 0;
  int escape_radius = 0;
  std::uint64_t samples = 0;
  std::uint64_t returns = 0;
  std::uint64_t escapes = 0;
  std::uint64_t exhausted = 0;  // walks hitting the move cap (counted as non-returns)
  double value = 0.0;
  double sigma = 0.0;
  stats::Interval wilson;
  // Upper bound on the probability, summed over escaped walks, of a later return.
  double bias_bound = 0.0;

  ReturnProbability as_return_probability() const;
};

// Walks from 0, one forced step, then until 0 or exit from B(0, R).
ReturnEstimate q_nu_montecarlo(int nu, int escape_radius, std::uint64_t n_samples, std::uint64_t seed);

// Combined agreement check between a quadrature value and an estimate:
// one-sided truncation bias plus `k` standard errors on both sides.
bool return_values_agree(const ReturnProbability& quad, const ReturnEstimate& mc, double k = 3.0);

struct FiniteReturn {
  int d = 0, m = 0, N = 0;
  std::uint64_t samples = 0;
  double estimate = 0.0;
  stats::Interval ci;
  std::optional<double> exact;  // transition-matrix value when N^(d-m) <= 1e4
};

// P_{e_1}[H_0 < N^2] for the walk on (Z/NZ)^(d-m).
FiniteReturn q_N_finite(int d, int m, int N, std::uint64_t n_samples, std::uint64_t seed);
double q_N_exact(int k, int N);

struct ConstantsRow {
  int d = 0;
  double q = 0.0;  // q(d - 2)
  double q_error = 0.0;
  double mu = 0.0;
  double mu_lo = 0.0, mu_hi = 0.0;
  std::optional<double> lambda0;
  std::optional<double> c0;
};

struct ConstantsReport {
  std::vector<ConstantsRow> rows;
  // Smallest d with mu < 1, bracketed by the q error bounds; empty when the
  // search limit is reached first.
  std::optional<int> d0_lo, d0_hi;
  double tolerance = 0.0;
};

// mu(d) = 49 (2/d + (1 - 2/d) q(d - 2)).
double mu_of(int d, double q_d_minus_2);
ConstantsRow constants_row(int d, double tolerance = 1e-12);
ConstantsReport constants_report(const std::vector<int>& d_values, int d0_search_limit = 1000,
                                 double tolerance = 1e-12);

}  // namespace torvac
