#pragma once

#include <cstdint>
#include <span>

namespace torvac::stats {

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;   // sample standard deviation (n - 1)
  double sem = 0.0;  // sd / sqrt(n)
};

Summary summarize(std::span<const double> xs);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return lo <= v && v <= hi; }
};

double normal_quantile(double p);
double t_quantile(double df, double p);

// Wilson score interval for a binomial proportion at two-sided level `level`.
Interval wilson(std::uint64_t successes, std::uint64_t n, double level = 0.95);

// Mean +- t-quantile * sem.
Interval mean_interval(const Summary& s, double level = 0.95);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_se = 0.0;
  double intercept_se = 0.0;
  std::size_t n = 0;

  Interval intercept_interval(double level = 0.95) const;
  Interval slope_interval(double level = 0.95) const;
};

// Ordinary least squares y = a + b x; needs n >= 3 for standard errors.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace torvac::stats
