#include "goldsci/sci.hpp"

#include <algorithm>
#include <cmath>

#include "goldsci/error.hpp"
#include "goldsci/stats.hpp"

namespace goldsci {

namespace {

using stats::kInf;

void check_arm(const ArmSummary& arm, const char* name) {
  if (arm.n < 2) throw DomainError(std::string("arm ") + name + ": sample size must be at least 2");
  if (!std::isfinite(arm.mean)) throw DomainError(std::string("arm ") + name + ": mean must be finite");
  if (arm.sd && !(*arm.sd > 0.0 && std::isfinite(*arm.sd))) {
    throw DomainError(std::string("arm ") + name + ": sd must be positive");
  }
}

double se_pair(const TrialData& trial, const ArmSummary& a, const ArmSummary& b) {
  const double root = std::sqrt(1.0 / a.n + 1.0 / b.n);
  if (const auto* known = std::get_if<KnownSigma>(&trial.variance)) return known->sigma * root;
  return stats::pooled_sd(*a.sd, a.n, *b.sd, b.n) * root;
}

bool close_rel(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

}  // namespace

void TrialData::validate() const {
  check_arm(arm_E, "E");
  check_arm(arm_R, "R");
  check_arm(arm_P, "P");
  if (const auto* known = std::get_if<KnownSigma>(&variance)) {
    if (!(known->sigma > 0.0 && std::isfinite(known->sigma))) throw DomainError("sigma must be positive");
  } else if (!arm_E.sd || !arm_R.sd || !arm_P.sd) {
    throw DomainError("pooled variance mode requires the standard deviation of every arm");
  }
}

DesignParams DesignParams::from_historical(double alpha, double r, double mu_R_hist, double q) {
  DesignParams p;
  p.alpha = alpha;
  p.r = r;
  p.mu_R_hist = mu_R_hist;
  p.delta0 = r * mu_R_hist;
  p.delta1 = (1.0 - r) * mu_R_hist;
  p.q = q;
  p.validate();
  return p;
}

void DesignParams::validate() const {
  // alpha = 0.5 is admitted: it makes every critical value zero.
  if (!(alpha > 0.0 && alpha <= 0.5)) throw DomainError("alpha must lie in (0, 0.5]");
  if (!(delta0 > 0.0 && std::isfinite(delta0))) throw DomainError("delta0 must be positive");
  if (!(delta1 > 0.0 && std::isfinite(delta1))) throw DomainError("delta1 must be positive");
  if (!(q > 0.0 && q < 1.0)) throw DomainError("q must lie in (0, 1)");
  if (r && !(*r > 0.0 && *r < 1.0)) throw DomainError("r must lie in (0, 1)");
  if (mu_R_hist && !(*mu_R_hist > 0.0 && std::isfinite(*mu_R_hist))) {
    throw DomainError("mu_r_hist must be positive");
  }
  if (r && mu_R_hist) {
    if (!close_rel(delta0, *r * *mu_R_hist) || !close_rel(delta1, (1.0 - *r) * *mu_R_hist)) {
      throw DomainError("delta0/delta1 inconsistent with r and mu_r_hist");
    }
  }
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::IU: return "iu";
    case Method::Informative: return "informative";
    case Method::SingleStep: return "single-step";
    case Method::BaselineNoSci: return "baseline";
  }
  return "?";
}

std::string_view to_string(FilterKind f) {
  return f == FilterKind::IUFilter ? "iu" : "superiority";
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::SuccessER: return "SuccessER";
    case Verdict::SuccessEP: return "SuccessEP";
    case Verdict::Failure: return "Failure";
  }
  return "?";
}

std::string_view to_string(SingleStepRho c) {
  return c == SingleStepRho::Exact ? "exact" : "squared";
}

SingleStepRho parse_single_step_rho(std::string_view name) {
  if (name == "exact") return SingleStepRho::Exact;
  if (name == "squared") return SingleStepRho::Squared;
  throw DomainError("unknown single-step correlation convention '" + std::string(name) + "'");
}

Method parse_method(std::string_view name) {
  if (name == "iu") return Method::IU;
  if (name == "informative") return Method::Informative;
  if (name == "single-step" || name == "singlestep") return Method::SingleStep;
  if (name == "baseline") return Method::BaselineNoSci;
  throw DomainError("unknown method '" + std::string(name) + "'");
}

FilterKind paired_filter(Method m) {
  return m == Method::IU ? FilterKind::IUFilter : FilterKind::SuperiorityFilter;
}

Contrasts contrasts(const TrialData& trial) {
  trial.validate();
  const auto& e = trial.arm_E;
  const auto& r = trial.arm_R;
  const auto& p = trial.arm_P;
  return Contrasts{e.mean - p.mean, e.mean - r.mean, r.mean - p.mean,
                   se_pair(trial, e, p), se_pair(trial, e, r), se_pair(trial, r, p)};
}

UnadjustedBounds unadjusted_bounds(const TrialData& trial, const DesignParams& params) {
  params.validate();
  const Contrasts c = contrasts(trial);
  const double z = params.alpha == 0.5 ? 0.0 : stats::upper_critical_value(params.alpha);
  return {c.diff_EP - z * c.se_EP, c.diff_ER - z * c.se_ER};
}

// Evaluated as ell_EP >= ell_ER + delta0, which is the same inequality as
// X_R - X_P >= z (se_EP - se_ER) + delta0 after cancelling X_E. Sharing the
// expression with sci_iu_formal keeps both IU constructions bit-identical.
bool iu_filter(const TrialData& trial, const DesignParams& params) {
  const auto [ell_EP, ell_ER] = unadjusted_bounds(trial, params);
  return ell_EP >= ell_ER + params.delta0;
}

bool superiority_filter(const TrialData& trial, const DesignParams& params) {
  params.validate();
  const Contrasts c = contrasts(trial);
  const double z = params.alpha == 0.5 ? 0.0 : stats::upper_critical_value(params.alpha);
  return c.diff_RP / c.se_RP >= z;
}

SciResult sci_iu_formal(const TrialData& trial, const DesignParams& params) {
  const auto [ell_EP, ell_ER] = unadjusted_bounds(trial, params);
  const double d0 = params.delta0;
  SciResult res{Method::IU, ell_EP, ell_ER, 0.0, 0.0, FilterKind::IUFilter, false,
                {params.alpha, params.alpha}};
  res.filter_holds = ell_EP >= ell_ER + d0;
  if (ell_EP < 0.0) {
    res.L_EP = ell_EP;
    res.L_ER = -kInf;
  } else if (ell_ER < -d0) {
    res.L_EP = 0.0;
    res.L_ER = ell_ER;
  } else {
    // L_min = min{ell_EP, ell_ER + d0}; L_ER = min{ell_EP - d0, ell_ER},
    // with the minimum taken on the same branch for both.
    const bool er_attains = ell_ER + d0 <= ell_EP;
    res.L_EP = std::min(ell_EP, ell_ER + d0);
    res.L_ER = er_attains ? ell_ER : ell_EP - d0;
  }
  return res;
}

SciResult sci_iu_intuitive(const TrialData& trial, const DesignParams& params) {
  const auto [ell_EP, ell_ER] = unadjusted_bounds(trial, params);
  SciResult res{Method::IU, ell_EP, ell_ER, 0.0, 0.0, FilterKind::IUFilter, false,
                {params.alpha, params.alpha}};
  res.filter_holds = iu_filter(trial, params);
  if (ell_EP < 0.0) {
    res.L_EP = ell_EP;
    res.L_ER = -kInf;
    return res;
  }
  if (res.filter_holds) {
    res.L_ER = ell_ER;
    res.L_EP = std::max(0.0, res.L_ER + params.delta0);
  } else {
    res.L_EP = ell_EP;
    res.L_ER = res.L_EP - params.delta0;
  }
  return res;
}

double informative_er_bound(double diff_ER, double se_ER, const DesignParams& params) {
  // H_ER^theta is tested at level q^(theta + d0) alpha. On the log scale the
  // left side increases and the right side decreases in theta, and the sign
  // change lies in [-d0, diff_ER].
  const double d0 = params.delta0;
  const double log_q = std::log(params.q);
  const double log_alpha = std::log(params.alpha);
  auto g = [&](double theta) {
    return stats::log_std_normal_cdf((theta - diff_ER) / se_ER) - ((theta + d0) * log_q + log_alpha);
  };
  const double z = params.alpha == 0.5 ? 0.0 : stats::upper_critical_value(params.alpha);
  if (!(se_ER > 0.0) || diff_ER - z * se_ER < -d0) {
    throw DomainError("informative E-R bound requires ell_ER >= -delta0");
  }
  const double lo = -d0;
  const double hi = diff_ER;
  if (!(hi > lo) || g(lo) >= 0.0) return lo;
  return stats::solve_monotone_root(g, stats::RootBracket{lo, hi, 1e-12});
}

double informative_ep_level(double L_ER, const DesignParams& params) {
  return -std::expm1((L_ER + params.delta0) * std::log(params.q)) * params.alpha;
}

SciResult sci_informative(const TrialData& trial, const DesignParams& params) {
  const auto [ell_EP, ell_ER] = unadjusted_bounds(trial, params);
  const Contrasts c = contrasts(trial);
  const double d0 = params.delta0;
  SciResult res{Method::Informative, ell_EP, ell_ER, 0.0, 0.0, FilterKind::SuperiorityFilter,
                superiority_filter(trial, params), {params.alpha, params.alpha}};
  if (ell_EP < 0.0) {
    res.L_EP = ell_EP;
    res.L_ER = -kInf;
    return res;
  }
  if (ell_ER < -d0) {
    res.L_EP = 0.0;
    res.L_ER = ell_ER;
    return res;
  }

  const double theta = informative_er_bound(c.diff_ER, c.se_ER, params);
  const double level_ep = informative_ep_level(theta, params);
  const double level_er = std::exp((theta + d0) * std::log(params.q)) * params.alpha;
  res.L_ER = theta;
  res.levels = {level_ep, level_er};
  if (level_ep < 1e-300) {
    res.L_EP = 0.0;
  } else {
    res.L_EP = std::max(0.0, c.diff_EP - stats::upper_critical_value(level_ep) * c.se_EP);
  }
  return res;
}

double single_step_correlation(int n_E, int n_R, int n_P) {
  if (n_E < 1 || n_R < 1 || n_P < 1) throw DomainError("group sizes must be positive");
  const double c_R = static_cast<double>(n_R) / n_E;
  const double c_P = static_cast<double>(n_P) / n_E;
  return std::sqrt(c_P * c_R / ((1.0 + c_P) * (1.0 + c_R)));
}

double single_step_correlation(int n_E, int n_R, int n_P, SingleStepRho convention) {
  const double rho = single_step_correlation(n_E, n_R, n_P);
  return convention == SingleStepRho::Squared ? rho * rho : rho;
}

SciResult sci_single_step(const TrialData& trial, const DesignParams& params) {
  params.validate();
  trial.validate();
  const double rho =
      single_step_correlation(trial.arm_E.n, trial.arm_R.n, trial.arm_P.n, params.single_step_rho);
  return sci_single_step(trial, params, stats::equicoordinate_quantile(params.alpha, rho));
}

SciResult sci_single_step(const TrialData& trial, const DesignParams& params, double d_alpha) {
  const auto [ell_EP, ell_ER] = unadjusted_bounds(trial, params);
  const Contrasts c = contrasts(trial);
  const double level = 1.0 - stats::std_normal_cdf(d_alpha);
  return SciResult{Method::SingleStep,
                   ell_EP,
                   ell_ER,
                   c.diff_EP - d_alpha * c.se_EP,
                   c.diff_ER - d_alpha * c.se_ER,
                   FilterKind::SuperiorityFilter,
                   superiority_filter(trial, params),
                   {level, level}};
}

SciResult baseline_bounds(const TrialData& trial, const DesignParams& params) {
  const auto [ell_EP, ell_ER] = unadjusted_bounds(trial, params);
  return SciResult{Method::BaselineNoSci, ell_EP, ell_ER, ell_EP, ell_ER,
                   FilterKind::SuperiorityFilter, superiority_filter(trial, params),
                   {params.alpha, params.alpha}};
}

SuccessOutcome baseline_hierarchical(const TrialData& trial, const DesignParams& params) {
  return adjudicate_success(baseline_bounds(trial, params), params);
}

SuccessOutcome adjudicate_success(const SciResult& result, const DesignParams& params) {
  if (result.filter_used != paired_filter(result.method)) {
    throw DomainError(std::string("method ") + std::string(to_string(result.method)) +
                      " cannot be interpreted with the " + std::string(to_string(result.filter_used)) +
                      " filter");
  }
  SuccessOutcome out;
  out.filter_holds = result.filter_holds;
  out.gatekeeper_rejected = result.L_EP >= 0.0;
  if (!out.gatekeeper_rejected) return out;

  if (result.method == Method::BaselineNoSci) {
    const bool er_rejected = result.ell_ER >= -params.delta0;
    if (!er_rejected) return out;
    if (result.filter_holds) {
      out.verdict = Verdict::SuccessER;
    } else if (result.ell_EP >= params.delta1) {
      out.verdict = Verdict::SuccessEP;
    }
    return out;
  }

  if (result.filter_holds) {
    if (result.L_ER >= -params.delta0) out.verdict = Verdict::SuccessER;
  } else if (result.L_EP >= params.delta1) {
    out.verdict = Verdict::SuccessEP;
  }
  return out;
}

SciResult compute_sci(Method method, const TrialData& trial, const DesignParams& params) {
  switch (method) {
    case Method::IU: return sci_iu_formal(trial, params);
    case Method::Informative: return sci_informative(trial, params);
    case Method::SingleStep: return sci_single_step(trial, params);
    case Method::BaselineNoSci: return baseline_bounds(trial, params);
  }
  throw DomainError("unknown method");
}

}  // namespace goldsci
