#include "goldsci/stats.hpp"

#include <algorithm>
#include <array>
#include <queue>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>

namespace goldsci::stats {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kTwoPi = 6.28318530717958647692;
constexpr double kLogSqrtTwoPi = 0.91893853320467274178;

// Outer integration range in standard deviations of the conditioning
// coordinate; the mass outside is below 1e-18.
constexpr double kOuterZ = 9.0;
constexpr double kQuadRelTol = 1e-10;
constexpr double kQuadAbsTol = 1e-13;
constexpr std::size_t kQuadMaxPanels = 400;

// Unsaturated Phi for internal differences.
double phi_raw(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

// Phi(b) - Phi(a) without cancellation in the upper tail.
double interval_prob(double a, double b) {
  if (!(a < b)) return 0.0;
  if (a > 0.0) return phi_raw(-a) - phi_raw(-b);
  return phi_raw(b) - phi_raw(a);
}

// Genz's BVNU: P(X > h, Y > k) for finite h, k and |r| <= 1
// (Drezner & Wesolowsky with Gauss-Legendre rules of order 6, 12, 20).
double bvnu(double h, double k, double r) {
  static constexpr std::array<std::array<double, 10>, 3> x = {{
      {-0.9324695142031522, -0.6612093864662647, -0.2386191860831970},
      {-0.9815606342467191, -0.9041172563704750, -0.7699026741943050,
       -0.5873179542866171, -0.3678314989981802, -0.1252334085114692},
      {-0.9931285991850949, -0.9639719272779138, -0.9122344282513259,
       -0.8391169718222188, -0.7463319064601508, -0.6360536807265150,
       -0.5108670019508271, -0.3737060887154196, -0.2277858511416451,
       -0.0765265211334973},
  }};
  static constexpr std::array<std::array<double, 10>, 3> w = {{
      {0.1713244923791705, 0.3607615730481384, 0.4679139345726904},
      {0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
       0.2031674267230659, 0.2334925365383547, 0.2491470458134029},
      {0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
       0.08327674157670475, 0.1019301198172404, 0.1181945319615184,
       0.1316886384491766, 0.1420961093183821, 0.1491729864726037,
       0.1527533871307259},
  }};

  int ng = 2;
  int lg = 10;
  if (std::abs(r) < 0.3) {
    ng = 0;
    lg = 3;
  } else if (std::abs(r) < 0.75) {
    ng = 1;
    lg = 6;
  }

  double hk = h * k;
  double bvn = 0.0;
  if (std::abs(r) < 0.925) {
    const double hs = (h * h + k * k) / 2.0;
    const double asr = std::asin(r);
    for (int i = 0; i < lg; ++i) {
      double sn = std::sin(asr * (x[ng][i] + 1.0) / 2.0);
      bvn += w[ng][i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      sn = std::sin(asr * (-x[ng][i] + 1.0) / 2.0);
      bvn += w[ng][i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
    }
    return bvn * asr / (2.0 * kTwoPi) + phi_raw(-h) * phi_raw(-k);
  }

  if (r < 0.0) {
    k = -k;
    hk = -hk;
  }
  if (std::abs(r) < 1.0) {
    const double as = (1.0 - r) * (1.0 + r);
    double a = std::sqrt(as);
    const double bs = (h - k) * (h - k);
    const double c = (4.0 - hk) / 8.0;
    const double d = (12.0 - hk) / 16.0;
    bvn = a * std::exp(-(bs / as + hk) / 2.0) *
          (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
    if (hk > -160.0) {
      const double b = std::sqrt(bs);
      bvn -= std::exp(-hk / 2.0) * std::sqrt(kTwoPi) * phi_raw(-b / a) * b *
             (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
    }
    a /= 2.0;
    for (int i = 0; i < lg; ++i) {
      double xs = (a * (x[ng][i] + 1.0)) * (a * (x[ng][i] + 1.0));
      double rs = std::sqrt(1.0 - xs);
      const double asr1 = -(bs / xs + hk) / 2.0;
      if (asr1 > -100.0) {
        bvn += a * w[ng][i] * std::exp(asr1) *
               (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs -
                (1.0 + c * xs * (1.0 + d * xs)));
      }
      xs = as * (-x[ng][i] + 1.0) * (-x[ng][i] + 1.0) / 4.0;
      rs = std::sqrt(1.0 - xs);
      const double asr2 = -(bs / xs + hk) / 2.0;
      if (asr2 > -100.0) {
        bvn += a * w[ng][i] * std::exp(asr2) *
               (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs -
                (1.0 + c * xs * (1.0 + d * xs)));
      }
    }
    bvn = -bvn / kTwoPi;
  }
  if (r > 0.0) return bvn + phi_raw(-std::max(h, k));
  bvn = -bvn;
  if (k > h) {
    if (h < 0.0) {
      bvn += phi_raw(k) - phi_raw(h);
    } else {
      bvn += phi_raw(-h) - phi_raw(-k);
    }
  }
  return bvn;
}

// Rectangle probability for a standard bivariate normal.
double standard_box_2d(double a1, double b1, double a2, double b2, double rho) {
  if (!(a1 < b1) || !(a2 < b2)) return 0.0;
  const double p = bivariate_normal_cdf(b1, b2, rho) - bivariate_normal_cdf(a1, b2, rho) -
                   bivariate_normal_cdf(b1, a2, rho) + bivariate_normal_cdf(a1, a2, rho);
  return std::clamp(p, 0.0, 1.0);
}

bool inside(double x, double lo, double hi) { return lo <= x && x <= hi; }

double box_1d(double lo, double hi, double m, double var, double var_ref) {
  if (var <= 1e-12 * var_ref) return inside(m, lo, hi) ? 1.0 : 0.0;
  const double s = std::sqrt(var);
  return interval_prob((lo - m) / s, (hi - m) / s);
}

// 2-D box under N(m, C); var_ref sets the scale below which a conditional
// variance is treated as zero.
double box_2d(const std::array<double, 2>& lo, const std::array<double, 2>& hi,
              const std::array<double, 2>& m, const Eigen::Matrix2d& c,
              const std::array<double, 2>& var_ref) {
  const bool deg0 = c(0, 0) <= 1e-12 * var_ref[0];
  const bool deg1 = c(1, 1) <= 1e-12 * var_ref[1];
  if (deg0 && deg1) return (inside(m[0], lo[0], hi[0]) && inside(m[1], lo[1], hi[1])) ? 1.0 : 0.0;
  if (deg0) return inside(m[0], lo[0], hi[0]) ? box_1d(lo[1], hi[1], m[1], c(1, 1), var_ref[1]) : 0.0;
  if (deg1) return inside(m[1], lo[1], hi[1]) ? box_1d(lo[0], hi[0], m[0], c(0, 0), var_ref[0]) : 0.0;

  const double s0 = std::sqrt(c(0, 0));
  const double s1 = std::sqrt(c(1, 1));
  double rho = std::clamp(c(0, 1) / (s0 * s1), -1.0, 1.0);
  if (std::abs(rho) > 1.0 - 1e-12) rho = rho > 0.0 ? 1.0 : -1.0;
  return standard_box_2d((lo[0] - m[0]) / s0, (hi[0] - m[0]) / s0, (lo[1] - m[1]) / s1,
                         (hi[1] - m[1]) / s1, rho);
}

void validate_region(const GaussianRegion& region) {
  const auto dim = region.lower.size();
  if (dim < 1 || dim > 3) throw DomainError("gaussian region dimension must be 1, 2 or 3");
  if (region.upper.size() != dim || region.mean.size() != dim ||
      region.covariance.rows() != dim || region.covariance.cols() != dim) {
    throw DomainError("gaussian region: inconsistent dimensions");
  }
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (std::isnan(region.lower[i]) || std::isnan(region.upper[i]) || !(region.lower[i] <= region.upper[i])) {
      throw DomainError("gaussian region: lower bound exceeds upper bound");
    }
    if (!std::isfinite(region.mean[i])) throw DomainError("gaussian region: mean must be finite");
  }
  const Eigen::MatrixXd& c = region.covariance;
  if (!c.allFinite()) throw DomainError("gaussian region: covariance must be finite");
  const double scale = 1.0 + c.cwiseAbs().maxCoeff();
  if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw DomainError("gaussian region: covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10) {
    throw DomainError("gaussian region: covariance is not positive semidefinite");
  }
}

double region_prob_3d(const GaussianRegion& region) {
  const Eigen::MatrixXd& c = region.covariance;
  Eigen::Index k = 0;
  c.diagonal().maxCoeff(&k);
  const double vk = c(k, k);
  if (vk <= 0.0) {
    for (Eigen::Index i = 0; i < 3; ++i) {
      if (!inside(region.mean[i], region.lower[i], region.upper[i])) return 0.0;
    }
    return 1.0;
  }
  const double sk = std::sqrt(vk);
  const std::array<Eigen::Index, 2> idx = {k == 0 ? 1 : 0, k == 2 ? 1 : 2};

  std::array<double, 2> lo{}, hi{}, m{}, slope{}, var_ref{};
  Eigen::Matrix2d cc;
  for (int a = 0; a < 2; ++a) {
    const auto i = idx[a];
    lo[a] = region.lower[i];
    hi[a] = region.upper[i];
    m[a] = region.mean[i];
    slope[a] = c(i, k) / sk;  // change in conditional mean per unit z
    var_ref[a] = std::max(c(i, i), vk);
    for (int b = 0; b < 2; ++b) cc(a, b) = c(i, idx[b]) - c(i, k) * c(idx[b], k) / vk;
  }
  cc(0, 0) = std::max(cc(0, 0), 0.0);
  cc(1, 1) = std::max(cc(1, 1), 0.0);

  double za = (region.lower[k] - region.mean[k]) / sk;
  double zb = (region.upper[k] - region.mean[k]) / sk;
  za = std::max(za, -kOuterZ);
  zb = std::min(zb, kOuterZ);
  if (!(za < zb)) return 0.0;

  auto integrand = [&](double z) {
    const std::array<double, 2> mz = {m[0] + slope[0] * z, m[1] + slope[1] * z};
    return std::exp(-0.5 * z * z - kLogSqrtTwoPi) * box_2d(lo, hi, mz, cc, var_ref);
  };

  // Rank-deficient conditional law: the remaining coordinates move along a
  // single direction W, and the admissible W-interval has endpoints that are
  // linear in z. The integrand has kinks (or jumps) where two endpoints
  // cross, so split the outer range there.
  std::vector<double> cuts = {za, zb};
  const double det_rel = cc.determinant() / std::max(var_ref[0] * var_ref[1], 1e-300);
  if (det_rel <= 1e-9) {
    std::array<double, 2> amp = {std::sqrt(cc(0, 0)), std::sqrt(cc(1, 1))};
    if (cc(0, 1) < 0.0) amp[1] = -amp[1];
    struct Line {
      double intercept;
      double slope;
    };
    std::vector<Line> lines;
    for (int a = 0; a < 2; ++a) {
      for (double bound : {lo[a], hi[a]}) {
        if (!std::isfinite(bound)) continue;
        if (std::abs(amp[a]) > std::sqrt(1e-12 * var_ref[a])) {
          lines.push_back({(bound - m[a]) / amp[a], -slope[a] / amp[a]});
        } else if (slope[a] != 0.0) {
          cuts.push_back((bound - m[a]) / slope[a]);
        }
      }
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
      for (std::size_t j = i + 1; j < lines.size(); ++j) {
        const double ds = lines[i].slope - lines[j].slope;
        if (ds != 0.0) cuts.push_back((lines[j].intercept - lines[i].intercept) / ds);
      }
    }
  }
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  double prev = za;
  for (double cut : cuts) {
    if (cut <= prev) continue;
    if (cut >= zb) break;
    total += integrate(integrand, prev, cut);
    prev = cut;
  }
  total += integrate(integrand, prev, zb);
  return std::clamp(total, 0.0, 1.0);
}

}  // namespace

double std_normal_pdf(double x) { return std::exp(-0.5 * x * x - kLogSqrtTwoPi); }

double std_normal_cdf(double x) {
  if (std::isnan(x)) throw DomainError("std_normal_cdf: argument is NaN");
  if (x > 8.5) return 1.0;
  if (x < -8.5) return 0.0;
  return phi_raw(x);
}

double log_std_normal_cdf(double x) {
  if (std::isnan(x)) throw DomainError("log_std_normal_cdf: argument is NaN");
  if (x > -30.0) return std::log(phi_raw(x));
  // Asymptotic Mills-ratio expansion.
  const double x2 = 1.0 / (x * x);
  return -0.5 * x * x - kLogSqrtTwoPi - std::log(-x) +
         std::log1p(x2 * (-1.0 + x2 * (3.0 - 15.0 * x2)));
}

double std_normal_quantile(double p) {
  if (!(p > 1e-300 && p < 1.0 - 1e-16)) {
    throw DomainError("std_normal_quantile: p must lie in (1e-300, 1 - 1e-16)");
  }
  return -kSqrt2 * boost::math::erfc_inv(2.0 * p);
}

double upper_critical_value(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("critical value: alpha must lie in (0, 1)");
  return alpha <= 0.5 ? -std_normal_quantile(alpha) : std_normal_quantile(1.0 - alpha);
}

double bivariate_normal_cdf(double h, double k, double rho) {
  if (std::isnan(h) || std::isnan(k) || std::isnan(rho) || std::abs(rho) > 1.0) {
    throw DomainError("bivariate_normal_cdf: rho must lie in [-1, 1]");
  }
  if (h == -kInf || k == -kInf) return 0.0;
  if (h == kInf) return k == kInf ? 1.0 : phi_raw(k);
  if (k == kInf) return phi_raw(h);
  return std::clamp(bvnu(-h, -k, rho), 0.0, 1.0);
}

double gaussian_region_prob(const GaussianRegion& region) {
  validate_region(region);
  const auto dim = region.lower.size();
  const Eigen::MatrixXd& c = region.covariance;
  if (dim == 1) return box_1d(region.lower[0], region.upper[0], region.mean[0], c(0, 0), c(0, 0));
  if (dim == 2) {
    const double ref = std::max(c(0, 0), c(1, 1));
    return box_2d({region.lower[0], region.lower[1]}, {region.upper[0], region.upper[1]},
                  {region.mean[0], region.mean[1]}, c.topLeftCorner<2, 2>(), {ref, ref});
  }
  return region_prob_3d(region);
}

double equicoordinate_quantile(double alpha, double rho) {
  if (!(alpha > 0.0 && alpha < 0.5)) throw DomainError("equicoordinate_quantile: alpha must lie in (0, 0.5)");
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("equicoordinate_quantile: rho must lie in [0, 1]");
  const double z = upper_critical_value(alpha);
  if (rho == 1.0) return z;
  // Bonferroni gives the upper end of the bracket.
  const double z_bonf = upper_critical_value(alpha / 2.0);
  auto f = [&](double d) { return bivariate_normal_cdf(d, d, rho) - (1.0 - alpha); };
  return solve_monotone_root(f, RootBracket{z, z_bonf, 1e-11});
}

double integrate(const std::function<double(double)>& f, double a, double b) {
  using Kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
  if (!(a < b)) return 0.0;
  struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
  };
  auto panel = [&](double lo, double hi) {
    double err = 0.0;
    const double v = Kronrod::integrate(f, lo, hi, 0, 0.0, &err);
    return Panel{lo, hi, v, err};
  };
  // Globally adaptive: always split the panel with the largest error.
  std::priority_queue<Panel> queue;
  queue.push(panel(a, b));
  double value = queue.top().value;
  double error = queue.top().error;
  while (error > std::max(kQuadAbsTol, kQuadRelTol * std::abs(value)) && queue.size() < kQuadMaxPanels) {
    const Panel worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const Panel left = panel(worst.a, mid);
    const Panel right = panel(mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    queue.push(left);
    queue.push(right);
  }
  return value;
}

double pooled_sd(double sd_a, int n_a, double sd_b, int n_b) {
  if (!(sd_a > 0.0) || !(sd_b > 0.0) || !std::isfinite(sd_a) || !std::isfinite(sd_b)) {
    throw DomainError("pooled_sd: standard deviations must be positive");
  }
  if (n_a < 2 || n_b < 2) throw DomainError("pooled_sd: group sizes must be at least 2");
  const double ss = (n_a - 1) * sd_a * sd_a + (n_b - 1) * sd_b * sd_b;
  return std::sqrt(ss / (n_a + n_b - 2));
}

}  // namespace goldsci::stats
