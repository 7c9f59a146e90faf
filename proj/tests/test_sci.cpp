#include <cstring>
#include <random>

#include "doctest.h"
#include "goldsci/sci.hpp"
#include "goldsci/stats.hpp"
#include "oracles.hpp"

using namespace goldsci;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

DesignParams scenario_params() { return DesignParams::from_historical(0.025, 0.5, 1.0, 0.01); }

TrialData table_trial(double x_E, double x_R) {
  return {{x_E, {}, 356}, {x_R, {}, 348}, {0.0, {}, 145}, KnownSigma{2.0}};
}

TrialData duloxetine(double mean_E) {
  return {{mean_E, 6.1, 147}, {9.4, 6.9, 148}, {8.3, 5.8, 145}, PooledPerComparison{}};
}

DesignParams duloxetine_params() {
  DesignParams p;
  p.delta0 = 2.5;
  p.delta1 = 2.5;
  return p;
}

struct Row {
  double x_E, x_R;
  bool filter;
  double L_EP, L_ER;
  Verdict verdict;
};

void check_rows(Method m, const DesignParams& p, std::initializer_list<Row> rows) {
  for (const Row& r : rows) {
    const SciResult s = compute_sci(m, table_trial(r.x_E, r.x_R), p);
    CAPTURE(r.x_E);
    CAPTURE(r.x_R);
    CHECK(s.filter_holds == r.filter);
    CHECK(std::abs(s.L_EP - r.L_EP) <= 1e-3);
    CHECK(std::abs(s.L_ER - r.L_ER) <= 1e-3);
    CHECK(adjudicate_success(s, p).verdict == r.verdict);
  }
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

// Independent draw of the three arm means.
struct Sampler {
  std::mt19937_64 gen;
  std::normal_distribution<double> z;
  explicit Sampler(std::uint64_t seed) : gen(seed) {}
  TrialData draw(double mu_E, double mu_R, double mu_P, int nE, int nR, int nP, double sigma) {
    return {{mu_E + sigma / std::sqrt(nE) * z(gen), {}, nE},
            {mu_R + sigma / std::sqrt(nR) * z(gen), {}, nR},
            {mu_P + sigma / std::sqrt(nP) * z(gen), {}, nP},
            KnownSigma{sigma}};
  }
};

}  // namespace

TEST_CASE("unadjusted bounds and IU bounds of the worked example") {
  const DesignParams p = scenario_params();
  const auto [ell_EP, ell_ER] = unadjusted_bounds(table_trial(1.0, 1.0), p);
  CHECK(std::abs(ell_EP - 0.614) <= 1e-3);
  CHECK(std::abs(ell_ER - (-0.295)) <= 1e-3);
  check_rows(Method::IU, p,
             {{1.0, 1.0, true, 0.205, -0.295, Verdict::SuccessER},
              {1.0, 0.5, false, 0.614, 0.114, Verdict::SuccessEP},
              {1.0, 0.3, false, 0.614, 0.114, Verdict::SuccessEP},
              {0.8, 0.3, false, 0.414, -0.086, Verdict::Failure}});
  CHECK(std::abs(unadjusted_bounds(table_trial(1.0, 0.3), p).ell_ER - 0.404) <= 1e-3);
}

TEST_CASE("informative bounds of the worked example") {
  check_rows(Method::Informative, scenario_params(),
             {{1.0, 1.0, true, 0.561, -0.340, Verdict::SuccessER},
              {1.0, 0.5, true, 0.607, 0.063, Verdict::SuccessER},
              {1.0, 0.3, false, 0.611, 0.228, Verdict::SuccessEP},
              {0.8, 0.3, false, 0.407, 0.063, Verdict::Failure}});
}

TEST_CASE("single-step bounds of the worked example, squared-correlation convention") {
  DesignParams p = scenario_params();
  p.single_step_rho = SingleStepRho::Squared;
  check_rows(Method::SingleStep, p,
             {{1.0, 1.0, true, 0.560, -0.337, Verdict::SuccessER},
              {1.0, 0.5, true, 0.560, 0.163, Verdict::SuccessER},
              {1.0, 0.3, false, 0.560, 0.363, Verdict::SuccessEP},
              {0.8, 0.3, false, 0.360, 0.163, Verdict::Failure}});
}

TEST_CASE("single-step bounds with the exact correlation match the quantile oracle") {
  const DesignParams p = scenario_params();
  const double rho = single_step_correlation(356, 348, 145);
  CHECK(rho == doctest::Approx(std::sqrt((145.0 / 356) * (348.0 / 356) / ((1 + 145.0 / 356) * (1 + 348.0 / 356)))));
  CHECK(single_step_correlation(356, 348, 145, SingleStepRho::Squared) == doctest::Approx(rho * rho));
  const double d = oracle::equicoordinate(0.025, rho);
  const TrialData t = table_trial(1.0, 1.0);
  const SciResult s = sci_single_step(t, p);
  const double se_EP = 2.0 * std::sqrt(1.0 / 356 + 1.0 / 145);
  const double se_ER = 2.0 * std::sqrt(1.0 / 356 + 1.0 / 348);
  CHECK(s.L_EP == doctest::Approx(1.0 - d * se_EP).epsilon(1e-8));
  CHECK(s.L_ER == doctest::Approx(0.0 - d * se_ER).epsilon(1e-8));
  // Many placebo patients: rho tends to sqrt(c_R / (1 + c_R)).
  const double lim = std::sqrt((348.0 / 356) / (1 + 348.0 / 356));
  CHECK(single_step_correlation(356, 348, 100000000) == doctest::Approx(lim).epsilon(1e-6));
}

TEST_CASE("filter thresholds of the worked example") {
  const DesignParams p = scenario_params();
  const double z = stats::upper_critical_value(0.025);
  const double se_EP = 2.0 * std::sqrt(1.0 / 356 + 1.0 / 145);
  const double se_ER = 2.0 * std::sqrt(1.0 / 356 + 1.0 / 348);
  const double se_RP = 2.0 * std::sqrt(1.0 / 348 + 1.0 / 145);
  CHECK(std::abs(z * (se_EP - se_ER) + 0.5 - 0.591) <= 1e-3);
  CHECK(std::abs(z * se_RP - 0.387) <= 1e-3);
  CHECK(iu_filter(table_trial(1.0, 0.5915), p));
  CHECK_FALSE(iu_filter(table_trial(1.0, 0.5900), p));
  CHECK(superiority_filter(table_trial(1.0, 0.3880), p));
  CHECK_FALSE(superiority_filter(table_trial(1.0, 0.3870), p));
}

TEST_CASE("clinical example with pooled variances") {
  const DesignParams p = duloxetine_params();
  const SciResult iu = sci_iu_formal(duloxetine(10.2), p);
  CHECK(std::abs(iu.ell_EP - 0.53) <= 0.01);
  CHECK(std::abs(iu.ell_ER - (-0.69)) <= 0.01);
  CHECK(std::abs(iu.L_EP - 0.53) <= 0.01);
  CHECK(std::abs(iu.L_ER - (-1.97)) <= 0.01);
  const SciResult inf = sci_informative(duloxetine(10.2), p);
  CHECK(std::abs(inf.L_EP - 0.528) <= 0.01);
  CHECK(std::abs(inf.L_ER - (-1.67)) <= 0.01);
  for (Method m : {Method::IU, Method::Informative, Method::SingleStep, Method::BaselineNoSci}) {
    const SciResult s = compute_sci(m, duloxetine(10.2), p);
    CHECK(adjudicate_success(s, p).verdict == Verdict::Failure);
  }
  const SciResult iu2 = sci_iu_formal(duloxetine(12.2), p);
  CHECK(std::abs(iu2.L_EP - 2.53) <= 0.01);
  CHECK(std::abs(iu2.L_ER - 0.03) <= 0.01);
  CHECK(adjudicate_success(iu2, p).verdict == Verdict::SuccessEP);
  const SciResult inf2 = sci_informative(duloxetine(12.2), p);
  CHECK(std::abs(inf2.L_EP - 2.53) <= 0.01);
  CHECK(std::abs(inf2.L_ER - (-0.59)) <= 0.01);
  CHECK(adjudicate_success(inf2, p).verdict == Verdict::SuccessEP);
  CHECK(baseline_hierarchical(duloxetine(12.2), p).verdict == Verdict::SuccessEP);
  // The R-P lower bound of the original data.
  const Contrasts c = contrasts(duloxetine(10.2));
  CHECK(std::abs(c.diff_RP - stats::upper_critical_value(0.025) * c.se_RP - (-0.37)) <= 0.01);
  CHECK_FALSE(superiority_filter(duloxetine(10.2), p));
}

TEST_CASE("formal and intuitive IU bounds are bit-identical") {
  Sampler s(12345);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> n(2, 400);
  for (int i = 0; i < 100000; ++i) {
    DesignParams p;
    p.alpha = 0.001 + 0.2 * (u(s.gen) + 1.0);
    p.delta0 = 0.05 + (u(s.gen) + 1.0);
    p.delta1 = 0.05 + (u(s.gen) + 1.0);
    const TrialData t = s.draw(u(s.gen), u(s.gen), u(s.gen), n(s.gen), n(s.gen), n(s.gen), 0.2 + (u(s.gen) + 1.0));
    const SciResult a = sci_iu_formal(t, p);
    const SciResult b = sci_iu_intuitive(t, p);
    REQUIRE(same_bits(a.L_EP, b.L_EP));
    REQUIRE(same_bits(a.L_ER, b.L_ER));
    REQUIRE(a.filter_holds == b.filter_holds);
    REQUIRE(adjudicate_success(a, p).verdict == adjudicate_success(b, p).verdict);
  }
}

TEST_CASE("informative E-R bound solves its defining equation") {
  const DesignParams p = scenario_params();
  const double z = stats::upper_critical_value(p.alpha);
  for (double diff : {-0.45, -0.2, 0.0, 0.3, 1.0, 2.5, 6.0}) {
    for (double se : {0.01, 0.05, 0.17, 0.5}) {
      if (diff - z * se < -p.delta0) {
        CHECK_THROWS_AS(informative_er_bound(diff, se, p), DomainError);
        continue;
      }
      const double theta = informative_er_bound(diff, se, p);
      const double lhs = oracle::normal_cdf_erfc((theta - diff) / se);
      const double rhs = std::pow(p.q, theta + p.delta0) * p.alpha;
      CHECK(std::abs(lhs - rhs) <= 1e-8 * std::max(rhs, 1e-300) + 1e-300);
      CHECK(theta >= -p.delta0);
      CHECK(theta <= diff);
    }
  }
  CHECK(informative_ep_level(-0.5, p) == 0.0);
  CHECK(informative_ep_level(0.5, p) == doctest::Approx(0.99 * 0.025));
}

TEST_CASE("gatekeeper and non-inferiority failures") {
  const DesignParams p = scenario_params();
  const TrialData weak = table_trial(0.1, 0.0);
  for (Method m : {Method::IU, Method::Informative}) {
    const SciResult s = compute_sci(m, weak, p);
    CHECK(s.L_EP < 0.0);
    CHECK(s.L_ER == -kInf);
    CHECK(adjudicate_success(s, p).verdict == Verdict::Failure);
    CHECK_FALSE(adjudicate_success(s, p).gatekeeper_rejected);
  }
  // E clearly beats P, but is far below R: H_ER^N stands.
  const TrialData inferior = table_trial(1.0, 2.5);
  for (Method m : {Method::IU, Method::Informative}) {
    const SciResult s = compute_sci(m, inferior, p);
    CHECK(s.L_EP == 0.0);
    CHECK(s.L_ER == doctest::Approx(s.ell_ER));
    CHECK(s.L_ER < -p.delta0);
  }
}

TEST_CASE("adjudication rejects mismatched filters") {
  const DesignParams p = scenario_params();
  SciResult s = sci_informative(table_trial(1.0, 1.0), p);
  s.filter_used = FilterKind::IUFilter;
  CHECK_THROWS_AS(adjudicate_success(s, p), DomainError);
  CHECK(paired_filter(Method::IU) == FilterKind::IUFilter);
  CHECK(paired_filter(Method::SingleStep) == FilterKind::SuperiorityFilter);
}

TEST_CASE("names round-trip") {
  for (Method m : {Method::IU, Method::Informative, Method::SingleStep, Method::BaselineNoSci}) {
    CHECK(parse_method(to_string(m)) == m);
  }
  CHECK(parse_single_step_rho("squared") == SingleStepRho::Squared);
  CHECK_THROWS_AS(parse_method("bonferroni"), DomainError);
  CHECK_THROWS_AS(parse_single_step_rho("cubed"), DomainError);
}

TEST_CASE("parameter and data validation") {
  const DesignParams h = DesignParams::from_historical(0.025, 0.4, 2.0);
  CHECK(h.delta0 == doctest::Approx(0.8));
  CHECK(h.delta1 == doctest::Approx(1.2));
  DesignParams p = scenario_params();
  p.alpha = 0.7;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p = scenario_params();
  p.q = 1.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p = scenario_params();
  p.delta0 = -0.1;
  CHECK_THROWS_AS(p.validate(), DomainError);
  TrialData t = table_trial(1.0, 1.0);
  t.arm_P.n = 1;
  CHECK_THROWS_AS(t.validate(), DomainError);
  TrialData pooled = duloxetine(10.2);
  pooled.arm_R.sd.reset();
  CHECK_THROWS_AS(pooled.validate(), DomainError);
  TrialData known = table_trial(1.0, 1.0);
  known.variance = KnownSigma{0.0};
  CHECK_THROWS_AS(known.validate(), DomainError);
}

TEST_CASE("alpha of one half gives the point estimates") {
  DesignParams p = scenario_params();
  p.alpha = 0.5;
  const auto [ell_EP, ell_ER] = unadjusted_bounds(table_trial(1.0, 0.7), p);
  CHECK(ell_EP == doctest::Approx(1.0));
  CHECK(ell_ER == doctest::Approx(0.3));
}

// Simultaneous coverage at parameters on the boundary of the hypotheses.
TEST_CASE("simultaneous coverage of all three constructions") {
  const DesignParams p = scenario_params();
  const int reps = 40000;
  struct Truth { double mu_E, mu_R; };
  for (Truth tr : {Truth{0.0, 0.5}, Truth{0.3, 0.8}, Truth{0.5, 0.5}, Truth{1.0, 0.0}, Truth{1.0, 1.5}}) {
    for (Method m : {Method::IU, Method::Informative, Method::SingleStep}) {
      Sampler s(99);
      int covered = 0;
      for (int i = 0; i < reps; ++i) {
        const SciResult r = compute_sci(m, s.draw(tr.mu_E, tr.mu_R, 0.0, 60, 50, 40, 1.0), p);
        covered += r.L_EP <= tr.mu_E && r.L_ER <= tr.mu_E - tr.mu_R;
      }
      const double cov = static_cast<double>(covered) / reps;
      const double se = std::sqrt(0.975 * 0.025 / reps);
      CAPTURE(to_string(m));
      CAPTURE(tr.mu_E);
      CAPTURE(tr.mu_R);
      CHECK(cov >= 0.975 - 3 * se);
    }
  }
}

TEST_CASE("probability of a false success claim") {
  const DesignParams p = scenario_params();
  const int reps = 40000;
  // No claim is true: mu_E - mu_R = -delta0 and mu_E - mu_P = delta1, or E no better than P.
  struct Truth { double mu_E, mu_R; };
  for (Truth tr : {Truth{0.5, 1.0}, Truth{0.0, 0.0}, Truth{0.0, 1.0}, Truth{0.0, -1.0}}) {
    for (Method m : {Method::IU, Method::Informative, Method::SingleStep, Method::BaselineNoSci}) {
      Sampler s(7);
      int claims = 0;
      for (int i = 0; i < reps; ++i) {
        const SciResult r = compute_sci(m, s.draw(tr.mu_E, tr.mu_R, 0.0, 60, 50, 40, 1.0), p);
        claims += adjudicate_success(r, p).verdict != Verdict::Failure;
      }
      const double rate = static_cast<double>(claims) / reps;
      CAPTURE(to_string(m));
      CHECK(rate <= 0.025 + 3 * std::sqrt(0.025 * 0.975 / reps));
    }
  }
}
