#pragma once

// Gaussian primitives shared by the interval, design and simulation layers:
// univariate CDF/quantile, the bivariate normal CDF, box probabilities for
// Gaussians of dimension <= 3 (possibly rank deficient), equicoordinate
// quantiles and a bracketing root solver.

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "goldsci/error.hpp"

namespace goldsci::stats {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

double std_normal_pdf(double x);

// Phi(x). Saturates to exactly 0 / 1 for |x| > 8.5.
double std_normal_cdf(double x);

// log Phi(x), accurate far into the lower tail.
double log_std_normal_cdf(double x);

// Phi^{-1}(p) for p in (1e-300, 1 - 1e-16); DomainError otherwise.
double std_normal_quantile(double p);

// Upper-tail critical value z with 1 - Phi(z) = alpha, computed from the
// lower tail so that tiny alphas keep full precision.
double upper_critical_value(double alpha);

// P(Z1 <= h, Z2 <= k) for a standard bivariate normal with correlation rho.
// Infinite h / k are accepted.
double bivariate_normal_cdf(double h, double k, double rho);

struct GaussianRegion {
  Eigen::VectorXd lower;  // -inf allowed
  Eigen::VectorXd upper;  // +inf allowed
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

// P(lower <= X <= upper) for X ~ N(mean, covariance), dimension 1..3.
double gaussian_region_prob(const GaussianRegion& region);

// d with P(Z1 <= d, Z2 <= d) = 1 - alpha under correlation rho in [0, 1].
double equicoordinate_quantile(double alpha, double rho);

double pooled_sd(double sd_a, int n_a, double sd_b, int n_b);

// Adaptive Gauss-Kronrod (7/15) quadrature of f over [a, b] to an error of
// max(1e-13, 1e-10 |integral|).
double integrate(const std::function<double(double)>& f, double a, double b);

struct RootBracket {
  double lo;
  double hi;
  double tol_abs = 1e-9;
};

inline constexpr int kRootMaxIterations = 200;

// Root of a monotone function on [lo, hi]. Secant steps are accepted while
// they shrink the bracket quickly; otherwise the step falls back to
// bisection. Returns a point within tol_abs of the root.
template <class F>
double solve_monotone_root(F&& f, const RootBracket& bracket) {
  if (!(bracket.lo < bracket.hi) || !(bracket.tol_abs > 0.0)) {
    throw DomainError("root bracket requires lo < hi and tol_abs > 0");
  }
  double a = bracket.lo;
  double b = bracket.hi;
  double fa = f(a);
  double fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (std::isnan(fa) || std::isnan(fb) || (fa < 0.0) == (fb < 0.0)) {
    throw NumericalError("root bracket [" + std::to_string(a) + ", " +
                         std::to_string(b) + "] has no sign change");
  }
  bool force_bisect = false;
  for (int it = 0; it < kRootMaxIterations; ++it) {
    const double width = b - a;
    if (width <= 2.0 * bracket.tol_abs) return 0.5 * (a + b);

    double x = 0.5 * (a + b);
    if (!force_bisect && std::isfinite(fa) && std::isfinite(fb)) {
      const double s = b - fb * (b - a) / (fb - fa);
      const double guard = 1e-3 * width;
      if (s > a + guard && s < b - guard) x = s;
    }
    const double fx = f(x);
    if (fx == 0.0) return x;
    if (std::isnan(fx)) throw NumericalError("root solver: function returned NaN");
    if ((fx < 0.0) == (fa < 0.0)) {
      a = x;
      fa = fx;
    } else {
      b = x;
      fb = fx;
    }
    // A secant step that fails to halve the bracket is followed by bisection.
    force_bisect = !force_bisect && (b - a) > 0.5 * width;
  }
  if (b - a <= 2.0 * bracket.tol_abs) return 0.5 * (a + b);
  throw NumericalError("root solver did not converge within " +
                       std::to_string(kRootMaxIterations) + " iterations");
}

}  // namespace goldsci::stats
