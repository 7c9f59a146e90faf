#pragma once

// Simultaneous lower confidence bounds for (mu_E - mu_P, mu_E - mu_R) in a
// three-arm gold-standard non-inferiority trial, the two reference-strength
// filters, and the success verdicts built on them.

#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace goldsci {

struct ArmSummary {
  double mean = 0.0;
  std::optional<double> sd;
  int n = 0;
};

// Common known standard deviation of all observations.
struct KnownSigma {
  double sigma = 1.0;
};

// Each comparison uses the pooled SD of the two arms involved.
struct PooledPerComparison {};

using VarianceMode = std::variant<KnownSigma, PooledPerComparison>;

struct TrialData {
  ArmSummary arm_E;
  ArmSummary arm_R;
  ArmSummary arm_P;
  VarianceMode variance = KnownSigma{};

  void validate() const;
};

// How the single-step bounds obtain the null correlation of (T_EP, T_ER).
// Published single-step figures correspond to Squared, i.e. the quantile
// evaluated at rho^2 instead of rho.
enum class SingleStepRho { Exact, Squared };

struct DesignParams {
  double alpha = 0.025;
  double delta0 = 0.0;  // non-inferiority margin
  double delta1 = 0.0;  // relevance margin for E versus P
  std::optional<double> r;
  std::optional<double> mu_R_hist;
  double q = 0.01;  // decay base of the informative bounds
  SingleStepRho single_step_rho = SingleStepRho::Exact;

  // delta0 = r * mu_R_hist, delta1 = (1 - r) * mu_R_hist.
  static DesignParams from_historical(double alpha, double r, double mu_R_hist, double q = 0.01);

  void validate() const;
};

enum class Method { IU, Informative, SingleStep, BaselineNoSci };
enum class FilterKind { IUFilter, SuperiorityFilter };
enum class Verdict { SuccessER, SuccessEP, Failure };

std::string_view to_string(Method m);
std::string_view to_string(FilterKind f);
std::string_view to_string(Verdict v);
std::string_view to_string(SingleStepRho c);
SingleStepRho parse_single_step_rho(std::string_view name);  // "exact" or "squared"
// Accepts "iu", "informative", "single-step", "baseline".
Method parse_method(std::string_view name);
FilterKind paired_filter(Method m);

// Nominal one-sided level behind each reported bound.
struct LevelsSpent {
  double ep = 0.0;
  double er = 0.0;
};

struct SciResult {
  Method method = Method::IU;
  double ell_EP = 0.0;
  double ell_ER = 0.0;
  double L_EP = 0.0;
  double L_ER = 0.0;  // may be -inf
  FilterKind filter_used = FilterKind::IUFilter;
  bool filter_holds = false;
  LevelsSpent levels;
};

struct SuccessOutcome {
  Verdict verdict = Verdict::Failure;
  bool filter_holds = false;
  bool gatekeeper_rejected = false;
};

// Per-comparison differences and standard errors.
struct Contrasts {
  double diff_EP, diff_ER, diff_RP;
  double se_EP, se_ER, se_RP;
};

Contrasts contrasts(const TrialData& trial);

struct UnadjustedBounds {
  double ell_EP;
  double ell_ER;
};

UnadjustedBounds unadjusted_bounds(const TrialData& trial, const DesignParams& params);

// X_R - X_P >= z_alpha (se_EP - se_ER) + delta0.
bool iu_filter(const TrialData& trial, const DesignParams& params);

// (X_R - X_P) / se_RP >= z_alpha.
bool superiority_filter(const TrialData& trial, const DesignParams& params);

// Stepwise bounds in their three-branch closed form.
SciResult sci_iu_formal(const TrialData& trial, const DesignParams& params);

// Gatekeeper, then the IU filter picks which contrast carries the level.
// Produces the same doubles as sci_iu_formal.
SciResult sci_iu_intuitive(const TrialData& trial, const DesignParams& params);

SciResult sci_informative(const TrialData& trial, const DesignParams& params);

// E-R bound of the informative construction once H_EP^S and H_ER^N are both
// rejected: the root of Phi((theta - diff_ER) / se_ER) = q^(theta + delta0) alpha.
// Requires diff_ER - z_alpha se_ER >= -delta0.
double informative_er_bound(double diff_ER, double se_ER, const DesignParams& params);

// Remaining level (1 - q^(L_ER + delta0)) alpha handed to the E-P bound.
double informative_ep_level(double L_ER, const DesignParams& params);

// Correlation of (T_EP, T_ER) under the joint null: sqrt(cP cR / ((1+cP)(1+cR))).
double single_step_correlation(int n_E, int n_R, int n_P);
// Correlation handed to the equicoordinate quantile under the chosen convention.
double single_step_correlation(int n_E, int n_R, int n_P, SingleStepRho convention);

SciResult sci_single_step(const TrialData& trial, const DesignParams& params);
// Same, with the equicoordinate quantile supplied by the caller.
SciResult sci_single_step(const TrialData& trial, const DesignParams& params, double d_alpha);

// Unadjusted bounds packaged as a result of the hierarchical test without
// simultaneous intervals (L_EP = ell_EP, L_ER = ell_ER, superiority filter).
SciResult baseline_bounds(const TrialData& trial, const DesignParams& params);

// H_EP^S, then H_ER^N, then H_EP^{delta1}; interpreted through the
// superiority filter.
SuccessOutcome baseline_hierarchical(const TrialData& trial, const DesignParams& params);

// SuccessER iff the filter holds and L_ER >= -delta0; SuccessEP iff it fails
// and L_EP >= delta1. Every success also requires the gatekeeper L_EP >= 0.
SuccessOutcome adjudicate_success(const SciResult& result, const DesignParams& params);

// Dispatch on method.
SciResult compute_sci(Method method, const TrialData& trial, const DesignParams& params);

}  // namespace goldsci
