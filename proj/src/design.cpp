#include "goldsci/design.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <thread>
#include <tuple>
#include <vector>


#include "goldsci/error.hpp"
#include "goldsci/simulate.hpp"
#include "goldsci/stats.hpp"

namespace goldsci {

namespace {

using stats::kInf;

// Joint law of D1 = X_E - X_P, D2 = X_R - X_P, D3 = X_E - X_R.
struct DifferenceLaw {
  Eigen::Vector3d mean;
  Eigen::Matrix3d cov;
  double se_EP, se_RP, se_ER;
  double rho_single_step;
};

DifferenceLaw difference_law(const EffectScenario& s, const Allocation& a) {
  const double var = s.sigma * s.sigma;
  const double iE = 1.0 / a.n_E;
  const double iR = 1.0 / a.n_R();
  const double iP = 1.0 / a.n_P();
  DifferenceLaw law;
  law.mean << s.effect_EP, s.effect_RP, s.effect_EP - s.effect_RP;
  law.cov << var * (iE + iP), var * iP, var * iE,  //
      var * iP, var * (iR + iP), -var * iR,        //
      var * iE, -var * iR, var * (iE + iR);
  law.se_EP = std::sqrt(law.cov(0, 0));
  law.se_RP = std::sqrt(law.cov(1, 1));
  law.se_ER = std::sqrt(law.cov(2, 2));
  law.rho_single_step = single_step_correlation(a.n_E, a.n_R(), a.n_P());
  return law;
}

// P(lower <= (D1, D2, D3) <= upper).
double box(const DifferenceLaw& law, const Eigen::Vector3d& lower, const Eigen::Vector3d& upper) {
  return stats::gaussian_region_prob({lower, upper, law.mean, law.cov});
}

struct Thresholds {
  double gate_EP;     // lower limit on D1 for the gatekeeper
  double er_success;  // lower limit on D3 for the E-R success condition
  double ep_success;  // lower limit on D1 for the E-P success condition
  double filter;      // D2 >= filter  <=>  filter holds
};

SuccessProbability polyhedral(const DifferenceLaw& law, const DesignParams& params, Method method) {
  const double z = params.alpha == 0.5 ? 0.0 : stats::upper_critical_value(params.alpha);
  const double d0 = params.delta0;
  const double d1 = params.delta1;
  const double sup_filter = z * law.se_RP;

  Thresholds t{};
  bool ep_needs_er = false;
  switch (method) {
    case Method::IU:
      // After the gatekeeper the IU filter selects ell_ER or ell_EP; if it
      // fails, L_EP = ell_EP and ell_ER >= -delta0 holds automatically.
      t = {z * law.se_EP, z * law.se_ER - d0, z * law.se_EP + d1, z * (law.se_EP - law.se_ER) + d0};
      ep_needs_er = true;
      break;
    case Method::BaselineNoSci:
      t = {z * law.se_EP, z * law.se_ER - d0, z * law.se_EP + d1, sup_filter};
      ep_needs_er = true;
      break;
    case Method::SingleStep: {
      // L^S = D - d_alpha se; the gatekeeper is L_EP^S >= 0.
      const double rho = params.single_step_rho == SingleStepRho::Squared
                             ? law.rho_single_step * law.rho_single_step
                             : law.rho_single_step;
      const double d = stats::equicoordinate_quantile(params.alpha, rho);
      t = {d * law.se_EP, d * law.se_ER - d0, d * law.se_EP + d1, sup_filter};
      break;
    }
    case Method::Informative:
      throw UnsupportedMode("analytic success probabilities are not available for the informative method");
  }

  SuccessProbability p;
  p.p_ER = box(law, {t.gate_EP, t.filter, t.er_success}, {kInf, kInf, kInf});
  const double d3_low = ep_needs_er ? t.er_success : -kInf;
  p.p_EP = box(law, {std::max(t.gate_EP, t.ep_success), -kInf, d3_low}, {kInf, t.filter, kInf});
  p.total = p.p_ER + p.p_EP;
  return p;
}

// Informative bounds: P(ER) is a box; for P(EP) condition on D3 = w, which
// fixes L_ER^inf and hence the level left for the E-P bound.
SuccessProbability informative_quadrature(const DifferenceLaw& law, const DesignParams& params) {
  const double z = stats::upper_critical_value(params.alpha);
  const double d0 = params.delta0;
  const double d1 = params.delta1;
  const double sup_filter = z * law.se_RP;
  const double gate = z * law.se_EP;
  const double er_low = z * law.se_ER - d0;

  SuccessProbability p;
  p.p_ER = box(law, {gate, sup_filter, er_low}, {kInf, kInf, kInf});

  const double mu1 = law.mean[0];
  const double mu3 = law.mean[2];
  const double s3 = law.se_ER;
  const double beta = law.cov(0, 2) / law.cov(2, 2);
  const double tau = std::sqrt(std::max(law.cov(0, 0) - law.cov(0, 2) * beta, 0.0));

  auto integrand = [&](double u) {
    const double w = mu3 + s3 * u;
    if (w - z * s3 < -d0) return 0.0;
    const double l_er = informative_er_bound(w, s3, params);
    const double level = informative_ep_level(l_er, params);
    if (level < 1e-300) return 0.0;
    const double a = std::max(gate, d1 + stats::upper_critical_value(level) * law.se_EP);
    const double b = w + sup_filter;  // D2 = D1 - w < filter threshold
    if (!(a < b)) return 0.0;
    const double m = mu1 + beta * (w - mu3);
    double inner;
    if (tau > 0.0) {
      const double lo = (a - m) / tau;
      const double hi = (b - m) / tau;
      inner = lo > 0.0 ? stats::std_normal_cdf(-lo) - stats::std_normal_cdf(-hi)
                       : stats::std_normal_cdf(hi) - stats::std_normal_cdf(lo);
    } else {
      inner = (a <= m && m < b) ? 1.0 : 0.0;
    }
    return stats::std_normal_pdf(u) * inner;
  };
  const double u_lo = std::max((er_low - mu3) / s3, -9.0);
  const double u_hi = 9.0;
  if (u_lo < u_hi) {
    p.p_EP = stats::integrate(integrand, u_lo, u_hi);
  }
  p.total = p.p_ER + p.p_EP;
  return p;
}

SuccessProbability monte_carlo(const EffectScenario& scenario, const Allocation& alloc,
                               const DesignParams& params, Method method, const EvalOptions& eval) {
  SimulationConfig cfg{scenario, alloc, params, {method}, eval.reps, eval.seed, eval.workers};
  const SimulationSummary sum = run_simulation(cfg);
  const MethodSummary& m = sum.methods.front();
  return {m.pos_total, m.pos_ER, m.pos_EP};
}

int min_admissible_n_E(double c_R, double c_P) {
  for (int n = 2;; ++n) {
    Allocation a{n, c_R, c_P};
    if (a.n_R() >= 2 && a.n_P() >= 2) return n;
    if (n > 1000000) throw DomainError("allocation ratios too small");
  }
}

}  // namespace

EvalOptions default_eval(Method method) {
  EvalOptions e;
  e.mode = method == Method::Informative ? EvalMode::Quadrature : EvalMode::Analytic;
  return e;
}

SuccessProbability success_probability(const EffectScenario& scenario, const Allocation& alloc,
                                       const DesignParams& params, Method method,
                                       const EvalOptions& eval) {
  scenario.validate();
  alloc.validate();
  params.validate();
  switch (eval.mode) {
    case EvalMode::MonteCarlo:
      return monte_carlo(scenario, alloc, params, method, eval);
    case EvalMode::Quadrature:
      if (method == Method::Informative) return informative_quadrature(difference_law(scenario, alloc), params);
      return polyhedral(difference_law(scenario, alloc), params, method);
    case EvalMode::Analytic:
      return polyhedral(difference_law(scenario, alloc), params, method);
  }
  throw DomainError("unknown evaluation mode");
}

SuccessProbability success_probability(const EffectScenario& scenario, const Allocation& alloc,
                                       const DesignParams& params, Method method) {
  return success_probability(scenario, alloc, params, method, default_eval(method));
}

double weighted_success_probability(const MixtureScenario& mixture, const Allocation& alloc,
                                    const DesignParams& params, Method method,
                                    const EvalOptions& eval) {
  mixture.validate();
  double s = 0.0;
  for (const auto& c : mixture.components) {
    if (c.weight == 0.0) continue;
    s += c.weight * success_probability(c.scenario, alloc, params, method, eval).total;
  }
  return s;
}

double weighted_success_probability(const MixtureScenario& mixture, const Allocation& alloc,
                                    const DesignParams& params, Method method) {
  return weighted_success_probability(mixture, alloc, params, method, default_eval(method));
}

SampleSizeOptions default_sizing(Method method) {
  SampleSizeOptions o;
  o.eval = default_eval(method);
  return o;
}

OptimizationResult required_total_n(const MixtureScenario& mixture, double c_R, double c_P,
                                    const DesignParams& params, Method method, double target,
                                    const SampleSizeOptions& options) {
  mixture.validate();
  params.validate();
  if (!(target > 0.0 && target < 1.0)) throw DomainError("target power must lie in (0, 1)");
  if (!(c_R > 0.0) || !(c_P > 0.0)) throw DomainError("allocation ratios must be positive");

  const int n_min = min_admissible_n_E(c_R, c_P);
  const int cap = options.n_E_cap;
  if (cap < n_min) throw DomainError("n_E cap below the smallest admissible n_E");

  std::vector<std::pair<int, double>> memo;
  auto power = [&](int n) {
    for (const auto& [k, v] : memo) {
      if (k == n) return v;
    }
    const double v = weighted_success_probability(mixture, Allocation{n, c_R, c_P}, params, method, options.eval);
    memo.emplace_back(n, v);
    return v;
  };
  auto ok = [&](int n) { return power(n) >= target; };

  int lo;  // largest n known to fail (or n_min - 1)
  int hi;  // smallest n known to succeed
  int start = std::clamp(options.n_E_hint > 0 ? options.n_E_hint : n_min, n_min, cap);
  int step = std::max(1, start / 32);
  if (ok(start)) {
    hi = start;
    lo = n_min - 1;
    while (hi > n_min) {
      const int cand = std::max(n_min, hi - step);
      if (!ok(cand)) {
        lo = cand;
        break;
      }
      hi = cand;
      step *= 2;
    }
  } else {
    lo = start;
    while (true) {
      if (lo >= cap) {
        throw NumericalError("target power " + std::to_string(target) + " not reached with n_E <= " +
                             std::to_string(cap));
      }
      const int cand = std::min(cap, lo + step);
      if (ok(cand)) {
        hi = cand;
        break;
      }
      lo = cand;
      step *= 2;
    }
  }
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    if (ok(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }

  const Allocation a{hi, c_R, c_P};
  OptimizationResult r;
  r.n_E = hi;
  r.n_R = a.n_R();
  r.n_P = a.n_P();
  r.N = a.total();
  r.c_R = c_R;
  r.c_P = c_P;
  r.achieved_power = power(hi);
  r.method = method;
  r.filter = paired_filter(method);
  return r;
}

OptimizeOptions default_optimize(Method method) {
  OptimizeOptions o;
  o.sizing = default_sizing(method);
  return o;
}

namespace {

bool better(const OptimizationResult& a, const OptimizationResult& b) {
  return std::tie(a.N, a.n_P, a.c_R, a.c_P) < std::tie(b.N, b.n_P, b.c_R, b.c_P);
}

struct GridSearch {
  const MixtureScenario& mixture;
  const DesignParams& params;
  Method method;
  double target;
  const OptimizeOptions& options;

  // Evaluates rows of a ratio grid; each row is processed by one worker
  // with warm starts along the row, so results do not depend on the number
  // of workers.
  std::optional<OptimizationResult> run(const std::vector<double>& c_R_values,
                                        const std::vector<double>& c_P_values) const {
    std::optional<OptimizationResult> best;
    std::mutex mu;
    std::size_t next_row = 0;
    std::exception_ptr failure;
    auto worker = [&] {
      while (true) {
        std::size_t row;
        {
          std::lock_guard lock(mu);
          if (next_row >= c_R_values.size() || failure) return;
          row = next_row++;
        }
        try {
          std::optional<OptimizationResult> row_best;
          SampleSizeOptions sizing = options.sizing;
          for (double c_P : c_P_values) {
            try {
              const auto r = required_total_n(mixture, c_R_values[row], c_P, params, method, target, sizing);
              sizing.n_E_hint = r.n_E;
              if (!row_best || better(r, *row_best)) row_best = r;
            } catch (const NumericalError&) {
              // unreachable at this cell
            }
          }
          std::lock_guard lock(mu);
          if (row_best && (!best || better(*row_best, *best))) best = row_best;
        } catch (...) {
          std::lock_guard lock(mu);
          failure = std::current_exception();
        }
      }
    };
    const unsigned n_workers = std::min<unsigned>(resolve_workers(options.workers),
                                                  static_cast<unsigned>(c_R_values.size()));
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < n_workers; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return best;
  }
};

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> out;
  const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int i = 0; i <= n; ++i) out.push_back(std::round((lo + i * step) * 1e6) / 1e6);
  return out;
}

}  // namespace

OptimizationResult optimize_allocation(const MixtureScenario& mixture, const DesignParams& params,
                                       Method method, double target, const OptimizeOptions& options) {
  mixture.validate();
  params.validate();
  if (!(options.ratio_min > 0.0 && options.ratio_min < options.ratio_max) ||
      !(options.coarse_step > 0.0) || !(options.fine_step > 0.0)) {
    throw DomainError("invalid allocation grid");
  }
  GridSearch search{mixture, params, method, target, options};
  const auto coarse = grid(options.ratio_min, options.ratio_max, options.coarse_step);
  auto best = search.run(coarse, coarse);
  if (!best) {
    throw NumericalError("target power not reachable on the allocation grid with n_E <= " +
                         std::to_string(options.sizing.n_E_cap));
  }

  const double radius = options.fine_radius * options.fine_step;
  for (int pass = 0; pass < 8; ++pass) {
    const double r_lo = std::max(options.ratio_min, best->c_R - radius);
    const double r_hi = std::min(options.ratio_max, best->c_R + radius);
    const double p_lo = std::max(options.ratio_min, best->c_P - radius);
    const double p_hi = std::min(options.ratio_max, best->c_P + radius);
    const auto fine = search.run(grid(r_lo, r_hi, options.fine_step), grid(p_lo, p_hi, options.fine_step));
    if (!fine || !better(*fine, *best)) break;
    best = fine;
    const double tol = 0.5 * options.fine_step;
    const bool on_edge = (best->c_R < r_lo + tol && r_lo > options.ratio_min) ||
                         (best->c_R > r_hi - tol && r_hi < options.ratio_max) ||
                         (best->c_P < p_lo + tol && p_lo > options.ratio_min) ||
                         (best->c_P > p_hi - tol && p_hi < options.ratio_max);
    if (!on_edge) break;
  }
  return *best;
}

}  // namespace goldsci
