#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "goldsci/design.hpp"
#include "goldsci/rng.hpp"
#include "goldsci/simulate.hpp"

using namespace goldsci;

namespace {

const std::vector<Method> kAll{Method::IU, Method::Informative, Method::SingleStep, Method::BaselineNoSci};

SimulationConfig base_config(std::uint64_t reps, std::uint64_t seed, unsigned workers) {
  SimulationConfig c;
  c.scenario = {1.0, 1.0, 2.0, {}};
  c.alloc = Allocation::from_counts(356, 348, 145);
  c.params = DesignParams::from_historical(0.025, 0.5, 1.0, 0.01);
  c.methods = kAll;
  c.reps = reps;
  c.seed = seed;
  c.workers = workers;
  return c;
}

bool same(const SimulationSummary& a, const SimulationSummary& b) {
  if (a.methods.size() != b.methods.size()) return false;
  for (std::size_t i = 0; i < a.methods.size(); ++i) {
    const MethodSummary& x = a.methods[i];
    const MethodSummary& y = b.methods[i];
    if (x.n_filter != y.n_filter || x.n_ER != y.n_ER || x.n_EP != y.n_EP) return false;
    if (x.median_L_EP != y.median_L_EP) return false;
    if (!(x.median_L_ER == y.median_L_ER || (std::isnan(x.median_L_ER) && std::isnan(y.median_L_ER)))) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("summaries do not depend on the number of workers") {
  const SimulationSummary one = run_simulation(base_config(20000, 77, 1));
  for (unsigned w : {2u, 3u, 7u, 16u}) CHECK(same(one, run_simulation(base_config(20000, 77, w))));
  CHECK(same(one, run_simulation(base_config(20000, 77, 1))));
  CHECK_FALSE(same(one, run_simulation(base_config(20000, 78, 1))));
}

TEST_CASE("a single replication and more workers than replications") {
  const SimulationSummary s = run_simulation(base_config(1, 5, 8));
  REQUIRE(s.methods.size() == 4);
  for (const MethodSummary& m : s.methods) {
    CHECK((m.pos_total == 0.0 || m.pos_total == 1.0));
    CHECK(std::isfinite(m.median_L_EP));
  }
  CHECK_THROWS_AS(run_simulation(base_config(0, 5, 1)), DomainError);
  SimulationConfig none = base_config(10, 5, 1);
  none.methods.clear();
  CHECK_THROWS_AS(run_simulation(none), DomainError);
}

TEST_CASE("total success is the exact sum of its parts") {
  const SimulationSummary s = run_simulation(base_config(30000, 11, 0));
  for (const MethodSummary& m : s.methods) {
    CHECK(m.pos_total - (m.pos_ER + m.pos_EP) == 0.0);
    CHECK(m.filter == paired_filter(m.method));
    CHECK(m.filter_rate == static_cast<double>(m.n_filter) / 30000.0);
  }
}

TEST_CASE("median with infinities") {
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(median_with_infinities({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median_with_infinities({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK(median_with_infinities({-inf, 1.0, 2.0}) == 1.0);
  CHECK(median_with_infinities({-inf, -inf, 2.0}) == -inf);
  CHECK(median_with_infinities({-inf, -inf, 2.0, 3.0}) == -inf);
  CHECK(median_with_infinities({-inf, 1.0, 2.0, 3.0}) == 1.5);
  CHECK(std::isnan(median_with_infinities({})));
}

TEST_CASE("sweeps over the reference ratio") {
  const SimulationConfig c = base_config(2000, 3, 1);
  CHECK(sweep_v(c, std::vector<double>{}, 1.0).empty());
  const std::vector<double> grid{1.0, 0.5, 0.0};
  const auto out = sweep_v(c, grid, 1.0);
  REQUIRE(out.size() == 3);
  CHECK(*out[1].v == 0.5);
  CHECK_THROWS_AS(sweep_v(c, std::vector<double>{1.5}, 1.0), DomainError);
  CHECK_THROWS_AS(sweep_v(c, grid, 0.0), DomainError);
}

TEST_CASE("simulated success agrees with the design formulas") {
  const std::uint64_t reps = 200000;
  for (double rp : {1.0, 0.5, 0.0}) {
    SimulationConfig c = base_config(reps, 21, 0);
    c.scenario.effect_RP = rp;
    const SimulationSummary s = run_simulation(c);
    for (const MethodSummary& m : s.methods) {
      const double p = success_probability(c.scenario, c.alloc, c.params, m.method).total;
      const double se = std::sqrt(p * (1 - p) / reps);
      CAPTURE(rp);
      CAPTURE(to_string(m.method));
      CHECK(std::abs(m.pos_total - p) <= 3 * se);
    }
  }
}

TEST_CASE("median lower E-P bound grows with the E-P effect") {
  double prev[4] = {-1e300, -1e300, -1e300, -1e300};
  for (double e = 0.0; e <= 2.0; e += 0.25) {
    SimulationConfig c = base_config(5000, 8, 1);
    c.scenario.effect_EP = e;
    const SimulationSummary s = run_simulation(c);
    for (std::size_t m = 0; m < 4; ++m) {
      CHECK(s.methods[m].median_L_EP >= prev[m]);
      prev[m] = s.methods[m].median_L_EP;
    }
  }
}

TEST_CASE("single-step never beats the informative bounds on the first scenario") {
  const std::vector<double> grid{1.0, 0.75, 0.5, 0.25, 0.0};
  SimulationConfig c = base_config(20000, 4, 0);
  c.methods = {Method::Informative, Method::SingleStep};
  double gap = 0.0;
  for (const SimulationSummary& s : sweep_v(c, grid, 1.0)) {
    CHECK(s.methods[1].pos_total <= s.methods[0].pos_total + 0.005);
    gap = std::max(gap, s.methods[0].pos_total - s.methods[1].pos_total);
  }
  CHECK(gap <= 0.12);
  CHECK(gap >= 0.05);
}

TEST_CASE("counter generator") {
  CounterRng a(1, 0), b(1, 0), c(1, 1);
  CHECK(a.next() == b.next());
  CHECK(a.next() != c.next());
  CounterRng g(42, 0);
  double sum = 0, sum2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = g.normal();
    sum += z;
    sum2 += z * z;
  }
  CHECK(std::abs(sum / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(sum2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
  for (int i = 0; i < 1000; ++i) {
    const double u = g.uniform();
    CHECK((u > 0.0 && u < 1.0));
  }
}
