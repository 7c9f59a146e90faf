#include "goldsci/scenario.hpp"

#include <cmath>
#include <string>

#include "goldsci/error.hpp"

namespace goldsci {

namespace {
int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }
}  // namespace

EffectScenario EffectScenario::from_ratio(double effect_EP, double v, double mu_R_hist, double sigma) {
  EffectScenario s{effect_EP, v * mu_R_hist, sigma, v};
  s.validate(mu_R_hist);
  return s;
}

void EffectScenario::validate() const {
  if (!(sigma > 0.0 && std::isfinite(sigma))) throw DomainError("scenario: sigma must be positive");
  if (!std::isfinite(effect_EP) || !std::isfinite(effect_RP)) {
    throw DomainError("scenario: effects must be finite");
  }
}

void EffectScenario::validate(double mu_R_hist) const {
  validate();
  if (v && std::abs(effect_RP - *v * mu_R_hist) > 1e-12 * std::max(1.0, std::abs(effect_RP))) {
    throw DomainError("scenario: effect_rp differs from v * mu_r_hist");
  }
}

int Allocation::n_R() const { return round_half_up(c_R * n_E); }
int Allocation::n_P() const { return round_half_up(c_P * n_E); }

Allocation Allocation::from_counts(int n_E, int n_R, int n_P) {
  if (n_E < 1) throw DomainError("allocation: n_E must be positive");
  Allocation a{n_E, static_cast<double>(n_R) / n_E, static_cast<double>(n_P) / n_E};
  a.validate();
  return a;
}

void Allocation::validate() const {
  if (!(c_R > 0.0 && std::isfinite(c_R)) || !(c_P > 0.0 && std::isfinite(c_P))) {
    throw DomainError("allocation: ratios must be positive");
  }
  if (n_E < 2 || n_R() < 2 || n_P() < 2) {
    throw DomainError("allocation: every arm needs at least 2 subjects (n_E=" + std::to_string(n_E) +
                      ", n_R=" + std::to_string(n_R()) + ", n_P=" + std::to_string(n_P()) + ")");
  }
}

void MixtureScenario::validate() const {
  if (components.empty()) throw DomainError("mixture: no components");
  double sum = 0.0;
  for (const auto& c : components) {
    if (!(c.weight >= 0.0 && std::isfinite(c.weight))) throw DomainError("mixture: weights must be >= 0");
    c.scenario.validate();
    sum += c.weight;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw DomainError("mixture: weights must sum to 1");
}

}  // namespace goldsci
