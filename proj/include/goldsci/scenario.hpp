#pragma once

#include <optional>
#include <vector>

namespace goldsci {

// Assumed true effects; the placebo mean is fixed at zero.
struct EffectScenario {
  double effect_EP = 0.0;  // mu_E - mu_P
  double effect_RP = 0.0;  // mu_R - mu_P
  double sigma = 1.0;
  std::optional<double> v;  // effect_RP / mu_R_hist, bookkeeping only

  // effect_RP = v * mu_R_hist.
  static EffectScenario from_ratio(double effect_EP, double v, double mu_R_hist, double sigma);

  void validate() const;
  void validate(double mu_R_hist) const;
};

// n_R = round(c_R n_E), n_P = round(c_P n_E), rounding half up.
struct Allocation {
  int n_E = 0;
  double c_R = 1.0;
  double c_P = 1.0;

  int n_R() const;
  int n_P() const;
  int total() const { return n_E + n_R() + n_P(); }

  static Allocation from_counts(int n_E, int n_R, int n_P);
  void validate() const;
};

struct MixtureComponent {
  EffectScenario scenario;
  double weight = 1.0;
};

// Discrete prior over effect scenarios.
struct MixtureScenario {
  std::vector<MixtureComponent> components;

  static MixtureScenario single(const EffectScenario& s) { return {{{s, 1.0}}}; }
  void validate() const;
};

}  // namespace goldsci
