#pragma once

// Slow reference implementations used only by the tests.

#include <cmath>
#include <functional>
#include <random>

namespace oracle {

constexpr long double kPi = 3.141592653589793238462643383279502884L;

inline long double pdf(long double x) { return std::exp(-0.5L * x * x) / std::sqrt(2.0L * kPi); }

// Phi(x) = 1/2 + phi(x) * sum x^(2n+1) / (1 * 3 * ... * (2n+1)).
inline double normal_cdf_series(double xd) {
  const long double x = xd;
  long double term = x;
  long double sum = x;
  for (int n = 1; n < 2000; ++n) {
    term *= x * x / (2.0L * n + 1.0L);
    sum += term;
    if (std::abs(term) < 1e-22L * std::abs(sum)) break;
  }
  return static_cast<double>(0.5L + pdf(x) * sum);
}

inline double normal_cdf_erfc(double x) {
  return static_cast<double>(0.5L * std::erfc(-static_cast<long double>(x) / std::sqrt(2.0L)));
}

// Composite Simpson rule with n (even) panels.
inline long double simpson(const std::function<long double(long double)>& f, long double a, long double b,
                           int n) {
  const long double h = (b - a) / n;
  long double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 == 1 ? 4.0L : 2.0L);
  return s * h / 3.0L;
}

// P(Z1 <= h, Z2 <= k) = integral_{-inf}^{h} phi(x) Phi((k - rho x) / sqrt(1 - rho^2)) dx.
inline double bvn_cdf(double h, double k, double rho) {
  if (std::abs(rho) == 1.0) {
    if (rho > 0) return normal_cdf_erfc(std::min(h, k));
    return std::max(0.0, normal_cdf_erfc(h) - normal_cdf_erfc(-k));
  }
  const long double s = std::sqrt(1.0L - static_cast<long double>(rho) * rho);
  const long double lo = -12.0L;
  if (h <= lo) return 0.0;
  auto f = [&](long double x) {
    return pdf(x) * 0.5L * std::erfc(-((k - rho * x) / s) / std::sqrt(2.0L));
  };
  return static_cast<double>(simpson(f, lo, h, 20000));
}

// Bisection on the bivariate oracle.
inline double equicoordinate(double alpha, double rho) {
  double a = 1.0, b = 4.0;
  for (int i = 0; i < 60; ++i) {
    const double m = 0.5 * (a + b);
    if (bvn_cdf(m, m, rho) < 1.0 - alpha) a = m; else b = m;
  }
  return 0.5 * (a + b);
}

inline double normal_quantile(double p) {
  double a = -40.0, b = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (a + b);
    if (normal_cdf_erfc(m) < p) a = m; else b = m;
  }
  return 0.5 * (a + b);
}

}  // namespace oracle
