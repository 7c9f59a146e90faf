#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "goldsci/scenario.hpp"
#include "goldsci/sci.hpp"

namespace goldsci {

struct SimulationConfig {
  EffectScenario scenario;
  Allocation alloc;
  DesignParams params;
  std::vector<Method> methods;
  std::uint64_t reps = 100000;
  std::uint64_t seed = 1;
  unsigned workers = 0;  // 0: hardware concurrency; results do not depend on it

  void validate() const;
};

struct MethodSummary {
  Method method = Method::IU;
  FilterKind filter = FilterKind::IUFilter;
  double filter_rate = 0.0;
  double pos_total = 0.0;  // pos_ER + pos_EP
  double pos_ER = 0.0;
  double pos_EP = 0.0;
  double median_L_EP = 0.0;
  double median_L_ER = 0.0;        // -inf when at least half of the bounds are -inf
  bool median_L_ER_infinite = false;
  std::uint64_t n_filter = 0;
  std::uint64_t n_ER = 0;
  std::uint64_t n_EP = 0;
};

struct SimulationSummary {
  std::optional<double> v;
  std::vector<MethodSummary> methods;
  std::uint64_t reps = 0;
  std::uint64_t seed = 0;
};

// Draws the arm means X_i ~ N(mu_i, sigma^2 / n_i) per replication and
// applies every requested method with its paired filter.
SimulationSummary run_simulation(const SimulationConfig& config);

// One summary per v with effect_RP = v * mu_R_hist.
std::vector<SimulationSummary> sweep_v(const SimulationConfig& base, std::span<const double> v_grid,
                                       double mu_R_hist);

// Median with -inf ranked below every real.
double median_with_infinities(std::vector<double> values);

unsigned resolve_workers(unsigned requested);

}  // namespace goldsci
