#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracle.hpp"
#include "qpt/classic.hpp"
#include "qpt/ga.hpp"

using namespace qpt;

namespace {

Population population_with_costs(const std::vector<double>& costs) {
  Population pop;
  for (double c : costs) {
    Individual ind;
    ind.fitness = c;
    pop.members.push_back(ind);
  }
  return pop;
}

bool same_genes(const Individual& a, const Individual& b) { return a.genes == b.genes; }

}  // namespace

TEST_CASE("mse_cost") {
  Rng rng(51);
  const GateParams p = sample_haar(rng);
  CHECK(mse_cost(Individual::from(p), six_intensities_exact(p)) == 0.0);
  CHECK(mse_cost(Individual{}, {{0.99, 1, 0.5, 0.5, 0.5, 0.5}}) == doctest::Approx(1e-4).epsilon(1e-12));
  const char in[] = {'L', 'H', 'L', 'L', 'H', 'H'};
  const char out[] = {'L', 'H', 'H', 'D', 'L', 'D'};
  for (int i = 0; i < 100; ++i) {
    const GateParams q = sample_haar(rng);
    MeasurementSet m;
    for (double& v : m.values) v = rng.uniform();
    const oracle::M2 u = oracle::gate(q.theta, q.n);
    double want = 0.0;
    for (std::size_t k = 0; k < 6; ++k) {
      const double d = oracle::intensity(u, in[k], out[k]) - m.values[k];
      want += d * d;
    }
    CHECK(std::abs(mse_cost(Individual::from(q), m) - want) < 1e-14);
  }
}

TEST_CASE("repair") {
  Individual a{{3.5 * kPi, 0, 0, 1}, 0.3, false};
  a = repair(a);
  CHECK(a.genes[0] == doctest::Approx(0.5 * kPi));
  CHECK(!a.fitness);

  Individual b{{1.0, 2, 0, 0}, {}, false};
  b = repair(b);
  CHECK(b.genes[1] == 1.0);
  CHECK(!b.degenerate_repair);

  Individual c{{1.0, 0, 0, 0}, {}, false};
  c = repair(c);
  CHECK(c.genes[3] == 1.0);
  CHECK(c.degenerate_repair);

  Individual d{{-0.25 * kPi, 0, 0.6, -0.8}, {}, false};
  d = repair(d);
  CHECK(d.genes[0] == doctest::Approx(0.75 * kPi));

  Individual ok{{1.0, 0, 0, 1}, 0.5, false};
  CHECK(repair(ok).fitness == 0.5);
}

TEST_CASE("tournament selection") {
  Rng rng(52);
  std::vector<double> costs;
  for (int i = 0; i < 40; ++i) costs.push_back(1.0 + i);
  std::shuffle(costs.begin(), costs.end(), rng.engine());
  Population pop = population_with_costs(costs);
  for (std::size_t i = 0; i < pop.members.size(); ++i) pop.members[i].genes[0] = static_cast<double>(i);
  const std::size_t best = static_cast<std::size_t>(std::min_element(costs.begin(), costs.end()) - costs.begin());

  SUBCASE("k = N always returns the best") {
    for (int t = 0; t < 100; ++t) CHECK(same_genes(tournament_select(pop, 40, rng), pop.members[best]));
  }
  SUBCASE("k = 1 is uniform") {
    std::vector<int> hits(40, 0);
    constexpr int kDraws = 40000;
    for (int t = 0; t < kDraws; ++t) ++hits[static_cast<std::size_t>(tournament_select(pop, 1, rng).genes[0])];
    double chi2 = 0.0;
    for (int h : hits) chi2 += (h - 1000.0) * (h - 1000.0) / 1000.0;
    CHECK(chi2 < 72.05);  // 39 dof, p = 0.001
  }
  SUBCASE("k = 3 selection pressure") {
    constexpr int kDraws = 10000;
    int wins = 0;
    for (int t = 0; t < kDraws; ++t) wins += same_genes(tournament_select(pop, 3, rng), pop.members[best]);
    // Distinct-member subsets: P = k / N. The with-replacement value
    // 1 - (1 - 1/N)^3 differs by less than the Monte-Carlo error here.
    const double p = 3.0 / 40.0;
    const double sd = std::sqrt(kDraws * p * (1 - p));
    CHECK(std::abs(wins - kDraws * p) < 4 * sd);
    const double p_repl = 1 - std::pow(1 - 1.0 / 40, 3);
    CHECK(std::abs(wins - kDraws * p_repl) < 4 * sd);
  }
}

TEST_CASE("blend interval and crossover bounds") {
  const auto [lo, hi] = blend_interval(0.2, 0.6, 0.5);
  CHECK(lo == doctest::Approx(0.0));
  CHECK(hi == doctest::Approx(0.8));
  const auto [lo2, hi2] = blend_interval(0.6, 0.2, 0.5);
  CHECK(lo2 == lo);
  CHECK(hi2 == hi);

  Rng rng(53);
  const Individual a{{1.0, 0.0, 1.0, 0.0}, {}, false};
  const auto [c1, c2] = blend_crossover(a, a, 0.5, rng);
  CHECK(c1.genes == a.genes);
  CHECK(c2.genes == a.genes);

  for (int i = 0; i < 1000; ++i) {
    const Individual p = random_individual(rng);
    const Individual q = random_individual(rng);
    const auto [x, y] = blend_crossover(p, q, 0.5, rng);
    CHECK(satisfies_constraints(x));
    CHECK(satisfies_constraints(y));
  }
}

TEST_CASE("blend crossover genes are uniform on the interval before repair") {
  // Theta genes well inside [0, pi] with an interval that stays inside: repair
  // leaves theta untouched, so its law is the raw blend law.
  Rng rng(54);
  const Individual a{{1.0, 0, 0, 1}, {}, false};
  const Individual b{{1.4, 0, 0, 1}, {}, false};
  const auto [lo, hi] = blend_interval(1.0, 1.4, 0.5);
  constexpr int kDraws = 100000;
  std::vector<double> u;
  u.reserve(kDraws);
  for (int i = 0; i < kDraws / 2; ++i) {
    const auto [x, y] = blend_crossover(a, b, 0.5, rng);
    u.push_back((x.genes[0] - lo) / (hi - lo));
    u.push_back((y.genes[0] - lo) / (hi - lo));
  }
  std::sort(u.begin(), u.end());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    d = std::max(d, std::max(std::abs(u[i] - static_cast<double>(i) / kDraws),
                             std::abs(static_cast<double>(i + 1) / kDraws - u[i])));
  }
  CHECK(u.front() >= 0.0);
  CHECK(u.back() <= 1.0);
  CHECK(d < 1.63 / std::sqrt(kDraws));  // KS, p = 0.01
}

TEST_CASE("gaussian mutation") {
  Rng rng(55);
  const Individual a{{1.0, 0.0, 1.0, 0.0}, 0.7, false};
  CHECK(gaussian_mutation(a, 0.0, 0.0, 0.2, rng).genes == a.genes);
  CHECK(gaussian_mutation(a, 0.0, 0.0, 0.2, rng).fitness == 0.7);
  CHECK(gaussian_mutation(a, 1.0, 0.0, 0.0, rng).genes == a.genes);

  // Zero genes stay zero through normalization, so a change marks a mutation.
  constexpr int kTrials = 100000;
  std::array<int, 3> changed{};
  const Individual base{{1.0, 0.0, 0.0, 1.0}, {}, false};
  for (int t = 0; t < kTrials; ++t) {
    const Individual m = gaussian_mutation(base, 0.1, 0.5, 1e-3, rng);
    changed[0] += m.genes[0] != base.genes[0];
    changed[1] += m.genes[1] != 0.0;
    changed[2] += m.genes[2] != 0.0;
  }
  const double sd = std::sqrt(kTrials * 0.1 * 0.9);
  for (int c : changed) CHECK(std::abs(c - kTrials * 0.1) < 4 * sd);
}

TEST_CASE("run_ga: elitism, constraints and cost") {
  Rng gates(57);
  const GaConfig cfg;
  for (int g = 0; g < 50; ++g) {
    const GateParams p = sample_haar(gates);
    const MeasurementSet m = six_intensities_exact(p);
    Rng rng(static_cast<std::uint64_t>(g));
    GaTrace trace;
    const ReconstructionResult r = run_ga(m, cfg, rng, nullptr, &trace);
    REQUIRE(trace.best_cost.size() == static_cast<std::size_t>(cfg.generations + 1));
    for (std::size_t i = 1; i < trace.best_cost.size(); ++i) REQUIRE(trace.best_cost[i] <= trace.best_cost[i - 1]);
    CHECK(!trace.constraint_violation);
    CHECK(r.cost == doctest::Approx(mse_cost(Individual::from(r.raw), m)).epsilon(1e-12));
    CHECK(is_canonical(r.params));
    CHECK(fidelity(r.params, r.raw) == doctest::Approx(1.0));
  }
}

TEST_CASE("run_ga is deterministic") {
  const MeasurementSet m = six_intensities_exact({1.2, {0.0, 0.6, 0.8}});
  Rng a(9), b(9);
  const ReconstructionResult ra = run_ga(m, {}, a);
  const ReconstructionResult rb = run_ga(m, {}, b);
  CHECK(ra.params == rb.params);
  CHECK(ra.cost == rb.cost);
}

TEST_CASE("run_ga accepts a seeded population") {
  const GateParams p{1.2, {0.0, 0.6, 0.8}};
  const MeasurementSet m = six_intensities_exact(p);
  std::vector<Individual> init(40, Individual::from(p));
  Rng rng(10);
  GaConfig cfg;
  cfg.generations = 0;
  const ReconstructionResult r = run_ga(m, cfg, rng, &init);
  CHECK(r.cost == 0.0);
  std::vector<Individual> wrong(3);
  CHECK_THROWS_AS(run_ga(m, cfg, rng, &wrong), InvalidParameter);
}

TEST_CASE("more generations do not raise the median cost") {
  Rng gates(58);
  std::vector<double> short_run, long_run;
  for (int g = 0; g < 100; ++g) {
    const MeasurementSet m = six_intensities_exact(sample_haar(gates));
    GaConfig cfg;
    cfg.generations = 10;
    Rng a(static_cast<std::uint64_t>(g));
    short_run.push_back(run_ga(m, cfg, a).cost);
    cfg.generations = 60;
    Rng b(static_cast<std::uint64_t>(g));
    long_run.push_back(run_ga(m, cfg, b).cost);
  }
  std::sort(short_run.begin(), short_run.end());
  std::sort(long_run.begin(), long_run.end());
  CHECK(long_run[50] <= short_run[50]);
}

TEST_CASE("ga beats the single-start baseline on noiseless gates") {
  Rng gates(59);
  Rng ga_rng(60), nm_rng(61);
  double ga_inf = 0.0, nm_inf = 0.0;
  for (int g = 0; g < 300; ++g) {
    const GateParams p = sample_haar(gates);
    const MeasurementSet m = six_intensities_exact(p);
    ga_inf += 1 - fidelity(run_ga(m, {}, ga_rng).params, p);
    nm_inf += 1 - fidelity(minimize_likelihood(m, {}, nm_rng).params, p);
  }
  CHECK(ga_inf < nm_inf);
}

TEST_CASE("GaConfig validation") {
  GaConfig cfg;
  cfg.population = 1;
  CHECK_THROWS_AS(cfg.validate(), InvalidParameter);
  cfg = {};
  cfg.tournament = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidParameter);
  cfg = {};
  cfg.crossover_prob = 1.5;
  CHECK_THROWS_AS(cfg.validate(), InvalidParameter);
}
