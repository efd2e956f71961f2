#include "qpt/ga.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "qpt/errors.hpp"

namespace qpt {

void GaConfig::validate() const {
  auto prob_ok = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (population < 2) throw InvalidParameter("GA population must be at least 2");
  if (generations < 0) throw InvalidParameter("GA generation count must be non-negative");
  if (tournament < 1 || tournament > population) {
    throw InvalidParameter("tournament size must lie in [1, population]");
  }
  if (!prob_ok(crossover_prob) || !prob_ok(mutation_prob)) {
    throw InvalidParameter("GA probabilities must lie in [0, 1]");
  }
  if (blend_alpha < 0.0 || mutation_sigma < 0.0) {
    throw InvalidParameter("blend alpha and mutation sigma must be non-negative");
  }
}

double mse_cost(const Individual& ind, const MeasurementSet& m) {
  const MeasurementSet th = six_intensities_exact(ind.params());
  double total = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    const double d = th.values[i] - m.values[i];
    total += d * d;
  }
  return total;
}

Individual repair(Individual ind) {
  const auto before = ind.genes;
  double& theta = ind.genes[0];
  if (theta < 0.0 || theta > kPi) {
    theta = std::fmod(theta, kPi);
    if (theta < 0.0) theta += kPi;
  }
  const double r = std::sqrt(ind.genes[1] * ind.genes[1] + ind.genes[2] * ind.genes[2] +
                             ind.genes[3] * ind.genes[3]);
  if (!(r > 0.0) || !std::isfinite(r)) {
    ind.genes[1] = 0.0;
    ind.genes[2] = 0.0;
    ind.genes[3] = 1.0;
    ind.degenerate_repair = true;
  } else if (r != 1.0) {
    for (std::size_t i = 1; i < 4; ++i) ind.genes[i] /= r;
  }
  if (ind.genes != before) ind.fitness.reset();
  return ind;
}

bool satisfies_constraints(const Individual& ind) {
  const double r = std::sqrt(ind.genes[1] * ind.genes[1] + ind.genes[2] * ind.genes[2] +
                             ind.genes[3] * ind.genes[3]);
  return ind.genes[0] >= 0.0 && ind.genes[0] <= kPi && std::abs(r - 1.0) <= 1e-12;
}

const Individual& tournament_select(const Population& pop, int k, Rng& rng) {
  const std::size_t n = pop.members.size();
  const std::size_t kk = static_cast<std::size_t>(std::clamp<int>(k, 1, static_cast<int>(n)));
  // Distinct draws; k is small against the population in practice.
  std::size_t picked[64];
  std::vector<std::size_t> overflow;
  std::size_t* chosen = picked;
  if (kk > 64) {
    overflow.resize(kk);
    chosen = overflow.data();
  }
  std::size_t best = n;
  for (std::size_t t = 0; t < kk; ++t) {
    std::size_t idx;
    do {
      idx = rng.index(n);
    } while (std::find(chosen, chosen + t, idx) != chosen + t);
    chosen[t] = idx;
    if (best == n || *pop.members[idx].fitness < *pop.members[best].fitness) best = idx;
  }
  return pop.members[best];
}

std::pair<double, double> blend_interval(double x_a, double x_b, double alpha) {
  const double lo = std::min(x_a, x_b);
  const double hi = std::max(x_a, x_b);
  const double d = hi - lo;
  return {lo - alpha * d, hi + alpha * d};
}

std::pair<Individual, Individual> blend_crossover(const Individual& a, const Individual& b, double alpha,
                                                  Rng& rng) {
  Individual c1 = a;
  Individual c2 = b;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto [lo, hi] = blend_interval(a.genes[i], b.genes[i], alpha);
    c1.genes[i] = rng.uniform(lo, hi);
    c2.genes[i] = rng.uniform(lo, hi);
  }
  if (c1.genes != a.genes) c1.fitness.reset();
  if (c2.genes != b.genes) c2.fitness.reset();
  return {repair(std::move(c1)), repair(std::move(c2))};
}

Individual gaussian_mutation(Individual ind, double prob, double mu, double sigma, Rng& rng) {
  bool changed = false;
  for (double& g : ind.genes) {
    if (rng.uniform() < prob) {
      g += rng.normal(mu, sigma);
      changed = true;
    }
  }
  if (changed) ind.fitness.reset();
  return repair(std::move(ind));
}

Individual random_individual(Rng& rng) {
  const double theta = rng.uniform(0.0, kPi);
  const Vec3 n = sample_direction(rng);
  return {{theta, n[0], n[1], n[2]}, {}, false};
}

namespace {

void evaluate(std::vector<Individual>& members, const MeasurementSet& m, int& evaluations) {
  for (Individual& ind : members) {
    if (!ind.fitness) {
      ind.fitness = mse_cost(ind, m);
      ++evaluations;
    }
  }
}

std::size_t best_index(const std::vector<Individual>& members) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < members.size(); ++i) {
    if (*members[i].fitness < *members[best].fitness) best = i;
  }
  return best;
}

std::size_t worst_index(const std::vector<Individual>& members) {
  std::size_t worst = 0;
  for (std::size_t i = 1; i < members.size(); ++i) {
    if (*members[i].fitness > *members[worst].fitness) worst = i;
  }
  return worst;
}

void check_constraints(std::vector<Individual>& members, GaTrace* trace) {
  for (Individual& ind : members) {
    ind = repair(std::move(ind));
    if (trace && !satisfies_constraints(ind)) trace->constraint_violation = true;
  }
}

}  // namespace

ReconstructionResult run_ga(const MeasurementSet& m, const GaConfig& cfg, Rng& rng,
                            const std::vector<Individual>* initial, GaTrace* trace) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = static_cast<std::size_t>(cfg.population);
  ReconstructionResult result;
  result.engine = "ga";

  Population pop;
  if (initial) {
    if (initial->size() != n) {
      throw InvalidParameter("initial population has " + std::to_string(initial->size()) +
                             " members, expected " + std::to_string(n));
    }
    pop.members = *initial;
  } else {
    pop.members.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pop.members.push_back(random_individual(rng));
  }
  check_constraints(pop.members, trace);
  evaluate(pop.members, m, result.evaluations);
  pop.best = pop.members[best_index(pop.members)];
  if (trace) trace->best_cost.push_back(*pop.best.fitness);

  std::vector<Individual> offspring(n);
  while (pop.generation < cfg.generations) {
    for (std::size_t i = 0; i < n; ++i) offspring[i] = tournament_select(pop, cfg.tournament, rng);

    for (std::size_t i = 0; i + 1 < n; i += 2) {
      if (rng.uniform() < cfg.crossover_prob) {
        std::tie(offspring[i], offspring[i + 1]) =
            blend_crossover(offspring[i], offspring[i + 1], cfg.blend_alpha, rng);
      }
    }
    check_constraints(offspring, trace);

    for (Individual& ind : offspring) {
      ind = gaussian_mutation(std::move(ind), cfg.mutation_prob, cfg.mutation_mu, cfg.mutation_sigma, rng);
    }
    check_constraints(offspring, trace);

    evaluate(offspring, m, result.evaluations);
    pop.members.swap(offspring);
    if (cfg.elitism) pop.members[worst_index(pop.members)] = pop.best;
    pop.best = pop.members[best_index(pop.members)];
    ++pop.generation;
    if (trace) trace->best_cost.push_back(*pop.best.fitness);
  }

  result.raw = pop.best.params();
  result.params = canonicalize(result.raw);
  result.cost = *pop.best.fitness;
  result.iterations = pop.generation;
  result.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace qpt
