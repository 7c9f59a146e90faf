#pragma once

// Design-stage calculations: probability of a success verdict under assumed
// true effects, required sample sizes at fixed allocation ratios, and the
// allocation that minimises the total sample size.

#include <cstdint>

#include "goldsci/scenario.hpp"
#include "goldsci/sci.hpp"

namespace goldsci {

enum class EvalMode {
  // Success events as boxes of the Gaussian (X_E-X_P, X_R-X_P, X_E-X_R).
  // Not available for the informative bounds, whose E-P condition is not a
  // half-plane.
  Analytic,
  // Conditioning on X_E - X_R and integrating the remaining normal
  // probability; covers every method, identical to Analytic where both apply.
  Quadrature,
  MonteCarlo,
};

struct EvalOptions {
  EvalMode mode = EvalMode::Analytic;
  std::uint64_t reps = 100000;
  std::uint64_t seed = 20240101;
  unsigned workers = 0;  // 0: hardware concurrency
};

// Quadrature for the informative method, Analytic otherwise.
EvalOptions default_eval(Method method);

struct SuccessProbability {
  double total = 0.0;  // p_ER + p_EP
  double p_ER = 0.0;
  double p_EP = 0.0;
};

SuccessProbability success_probability(const EffectScenario& scenario, const Allocation& alloc,
                                       const DesignParams& params, Method method,
                                       const EvalOptions& eval);
SuccessProbability success_probability(const EffectScenario& scenario, const Allocation& alloc,
                                       const DesignParams& params, Method method);

double weighted_success_probability(const MixtureScenario& mixture, const Allocation& alloc,
                                    const DesignParams& params, Method method,
                                    const EvalOptions& eval);
double weighted_success_probability(const MixtureScenario& mixture, const Allocation& alloc,
                                    const DesignParams& params, Method method);

struct OptimizationResult {
  int n_E = 0;
  int n_R = 0;
  int n_P = 0;
  int N = 0;
  double c_R = 0.0;
  double c_P = 0.0;
  double achieved_power = 0.0;
  Method method = Method::IU;
  FilterKind filter = FilterKind::IUFilter;
};

struct SampleSizeOptions {
  EvalOptions eval;
  int n_E_cap = 100000;
  int n_E_hint = 0;  // starting point of the search; 0 = smallest admissible n_E
};

SampleSizeOptions default_sizing(Method method);

// Smallest n_E (found by galloping + integer bisection) whose weighted
// success probability reaches target at fixed ratios. Throws NumericalError
// when target is not reached with n_E <= n_E_cap.
OptimizationResult required_total_n(const MixtureScenario& mixture, double c_R, double c_P,
                                    const DesignParams& params, Method method, double target,
                                    const SampleSizeOptions& options);

struct OptimizeOptions {
  SampleSizeOptions sizing;
  double ratio_min = 0.05;
  double ratio_max = 3.0;
  double coarse_step = 0.05;
  double fine_step = 0.01;
  int fine_radius = 5;  // fine cells on each side of the coarse optimum
  unsigned workers = 0;
};

OptimizeOptions default_optimize(Method method);

// Coarse grid over (c_R, c_P), then a fine grid around the best cell,
// re-centred while the optimum sits on the window edge. Ties go to the
// smaller n_P, then the smaller c_R.
OptimizationResult optimize_allocation(const MixtureScenario& mixture, const DesignParams& params,
                                       Method method, double target, const OptimizeOptions& options);

}  // namespace goldsci
