#include "torvac/stats.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace torvac::stats {

Summary summarize(std::span<const double> xs) {
  Summary s;
  s.n = xs.size();
  if (s.n == 0) return s;
  double m = 0.0;
  for (double v : xs) m += v;
  m /= static_cast<double>(s.n);
  s.mean = m;
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : xs) ss += (v - m) * (v - m);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
    s.sem = s.sd / std::sqrt(static_cast<double>(s.n));
  }
  return s;
}

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal_distribution<>(), p); }

double t_quantile(double df, double p) {
  if (!(df > 0)) throw std::invalid_argument("t quantile needs positive degrees of freedom");
  return boost::math::quantile(boost::math::students_t_distribution<>(df), p);
}

Interval wilson(std::uint64_t successes, std::uint64_t n, double level) {
  if (n == 0) return {0.0, 1.0};
  if (successes > n) throw std::invalid_argument("wilson: successes exceed trials");
  const double z = normal_quantile(0.5 + level / 2.0);
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * nn)) / (1 + z2 / nn);
  const double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / (1 + z2 / nn);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

Interval mean_interval(const Summary& s, double level) {
  if (s.n < 2) return {s.mean, s.mean};
  const double q = t_quantile(static_cast<double>(s.n - 1), 0.5 + level / 2.0);
  return {s.mean - q * s.sem, s.mean + q * s.sem};
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_line: size mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("fit_line: need at least two points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("fit_line: x values are all equal");
  LinearFit f;
  f.n = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - f.intercept - f.slope * x[i];
    sse += e * e;
  }
  f.r2 = syy > 0 ? 1.0 - sse / syy : 1.0;
  if (n > 2) {
    const double s2 = sse / static_cast<double>(n - 2);
    f.slope_se = std::sqrt(s2 / sxx);
    double sx2 = 0;
    for (double v : x) sx2 += v * v;
    f.intercept_se = std::sqrt(s2 * sx2 / (static_cast<double>(n) * sxx));
  }
  return f;
}

Interval LinearFit::intercept_interval(double level) const {
  if (n < 3) return {intercept, intercept};
  const double q = t_quantile(static_cast<double>(n - 2), 0.5 + level / 2.0);
  return {intercept - q * intercept_se, intercept + q * intercept_se};
}

Interval LinearFit::slope_interval(double level) const {
  if (n < 3) return {slope, slope};
  const double q = t_quantile(static_cast<double>(n - 2), 0.5 + level / 2.0);
  return {slope - q * slope_se, slope + q * slope_se};
}

}  // namespace torvac::stats
