#include "goldsci/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "goldsci/error.hpp"
#include "goldsci/rng.hpp"
#include "goldsci/stats.hpp"

namespace goldsci {

unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

void SimulationConfig::validate() const {
  scenario.validate();
  alloc.validate();
  params.validate();
  if (reps < 1) throw DomainError("simulation: reps must be at least 1");
  if (methods.empty()) throw DomainError("simulation: no methods requested");
}

double median_with_infinities(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t n = values.size();
  const std::size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  if (lower == -stats::kInf) return -stats::kInf;
  return 0.5 * (lower + upper);
}

namespace {

struct Tally {
  std::uint64_t filter = 0;
  std::uint64_t er = 0;
  std::uint64_t ep = 0;
};

}  // namespace

SimulationSummary run_simulation(const SimulationConfig& config) {
  config.validate();
  const std::uint64_t reps = config.reps;
  const std::size_t n_methods = config.methods.size();
  const int n_E = config.alloc.n_E;
  const int n_R = config.alloc.n_R();
  const int n_P = config.alloc.n_P();
  const double sigma = config.scenario.sigma;
  const double sd_E = sigma / std::sqrt(static_cast<double>(n_E));
  const double sd_R = sigma / std::sqrt(static_cast<double>(n_R));
  const double sd_P = sigma / std::sqrt(static_cast<double>(n_P));

  double d_alpha = 0.0;
  if (std::find(config.methods.begin(), config.methods.end(), Method::SingleStep) != config.methods.end()) {
    const double rho = single_step_correlation(n_E, n_R, n_P, config.params.single_step_rho);
    d_alpha = stats::equicoordinate_quantile(config.params.alpha, rho);
  }

  // Bounds are stored per replication so medians do not depend on the
  // partitioning; counts are reduced by integer addition.
  std::vector<double> L_EP(reps * n_methods);
  std::vector<double> L_ER(reps * n_methods);
  const unsigned n_workers =
      static_cast<unsigned>(std::min<std::uint64_t>(resolve_workers(config.workers), reps));
  std::vector<std::vector<Tally>> tallies(n_workers, std::vector<Tally>(n_methods));

  auto work = [&](unsigned w) {
    const std::uint64_t begin = reps * w / n_workers;
    const std::uint64_t end = reps * (w + 1) / n_workers;
    TrialData trial;
    trial.variance = KnownSigma{sigma};
    trial.arm_E.n = n_E;
    trial.arm_R.n = n_R;
    trial.arm_P.n = n_P;
    for (std::uint64_t i = begin; i < end; ++i) {
      CounterRng rng(config.seed, i);
      trial.arm_E.mean = config.scenario.effect_EP + sd_E * rng.normal();
      trial.arm_R.mean = config.scenario.effect_RP + sd_R * rng.normal();
      trial.arm_P.mean = sd_P * rng.normal();
      for (std::size_t m = 0; m < n_methods; ++m) {
        const Method method = config.methods[m];
        const SciResult res = method == Method::SingleStep ? sci_single_step(trial, config.params, d_alpha)
                                                           : compute_sci(method, trial, config.params);
        const SuccessOutcome out = adjudicate_success(res, config.params);
        Tally& t = tallies[w][m];
        t.filter += res.filter_holds ? 1 : 0;
        t.er += out.verdict == Verdict::SuccessER ? 1 : 0;
        t.ep += out.verdict == Verdict::SuccessEP ? 1 : 0;
        L_EP[m * reps + i] = res.L_EP;
        L_ER[m * reps + i] = res.L_ER;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < n_workers; ++w) pool.emplace_back(work, w);
  work(0);
  for (auto& t : pool) t.join();

  SimulationSummary summary;
  summary.reps = reps;
  summary.seed = config.seed;
  summary.v = config.scenario.v;
  const double dn = static_cast<double>(reps);
  for (std::size_t m = 0; m < n_methods; ++m) {
    MethodSummary ms;
    ms.method = config.methods[m];
    ms.filter = paired_filter(ms.method);
    for (unsigned w = 0; w < n_workers; ++w) {
      ms.n_filter += tallies[w][m].filter;
      ms.n_ER += tallies[w][m].er;
      ms.n_EP += tallies[w][m].ep;
    }
    ms.filter_rate = ms.n_filter / dn;
    ms.pos_ER = ms.n_ER / dn;
    ms.pos_EP = ms.n_EP / dn;
    ms.pos_total = ms.pos_ER + ms.pos_EP;
    ms.median_L_EP = median_with_infinities({L_EP.begin() + m * reps, L_EP.begin() + (m + 1) * reps});
    ms.median_L_ER = median_with_infinities({L_ER.begin() + m * reps, L_ER.begin() + (m + 1) * reps});
    ms.median_L_ER_infinite = ms.median_L_ER == -stats::kInf;
    summary.methods.push_back(ms);
  }
  return summary;
}

std::vector<SimulationSummary> sweep_v(const SimulationConfig& base, std::span<const double> v_grid,
                                       double mu_R_hist) {
  if (!(mu_R_hist > 0.0)) throw DomainError("sweep: mu_r_hist must be positive");
  std::vector<SimulationSummary> out;
  out.reserve(v_grid.size());
  for (double v : v_grid) {
    if (!(v >= 0.0 && v <= 1.2)) throw DomainError("sweep: v must lie in [0, 1.2]");
    SimulationConfig cfg = base;
    cfg.scenario = EffectScenario::from_ratio(base.scenario.effect_EP, v, mu_R_hist, base.scenario.sigma);
    out.push_back(run_simulation(cfg));
  }
  return out;
}

}  // namespace goldsci
