#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "qpt/polarimetry.hpp"
#include "qpt/reconstruction.hpp"

namespace qpt {

/// Real-coded chromosome (theta, n_x, n_y, n_z).
struct Individual {
  std::array<double, 4> genes{0.0, 0.0, 0.0, 1.0};
  /// Cached cost; empty whenever a gene changed since the last evaluation.
  std::optional<double> fitness;
  /// Set by repair() when n had to be replaced by (0, 0, 1).
  bool degenerate_repair = false;

  GateParams params() const { return {genes[0], {genes[1], genes[2], genes[3]}}; }
  static Individual from(const GateParams& p) { return {{p.theta, p.n[0], p.n[1], p.n[2]}, {}, false}; }
};

struct GaConfig {
  int population = 40;
  int generations = 60;
  int tournament = 3;
  double crossover_prob = 0.8;
  double blend_alpha = 0.5;
  double mutation_prob = 0.1;
  double mutation_mu = 0.0;
  double mutation_sigma = 0.2;
  bool elitism = true;

  /// Throws InvalidParameter if any field is out of range.
  void validate() const;
};

struct Population {
  std::vector<Individual> members;
  int generation = 0;
  Individual best;
};

/// Sum of squared differences between model and measured intensities.
double mse_cost(const Individual& ind, const MeasurementSet& m);

/// theta taken modulo pi into [0, pi]; n normalized (zero vector -> (0, 0, 1)).
/// Clears the cached fitness if anything changed.
Individual repair(Individual ind);

/// Whether the individual satisfies the physical constraints to 1e-12.
bool satisfies_constraints(const Individual& ind);

/// Fittest of `k` distinct members drawn uniformly. Requires every member evaluated.
const Individual& tournament_select(const Population& pop, int k, Rng& rng);

/// Interval from which a blend-crossover child gene is drawn.
std::pair<double, double> blend_interval(double x_a, double x_b, double alpha);

std::pair<Individual, Individual> blend_crossover(const Individual& a, const Individual& b, double alpha,
                                                  Rng& rng);

Individual gaussian_mutation(Individual ind, double prob, double mu, double sigma, Rng& rng);

/// Uniform theta in [0, pi], isotropic n.
Individual random_individual(Rng& rng);

/// Per-generation trace, recorded when requested.
struct GaTrace {
  std::vector<double> best_cost;
  /// Set if any individual violated the constraints after a repair stage.
  bool constraint_violation = false;
};

/// Generational GA: tournament -> blend crossover -> repair -> Gaussian
/// mutation -> repair -> evaluation -> replacement -> elitism -> best update.
/// `initial`, if given, must hold exactly cfg.population members.
ReconstructionResult run_ga(const MeasurementSet& m, const GaConfig& cfg, Rng& rng,
                            const std::vector<Individual>* initial = nullptr, GaTrace* trace = nullptr);

}  // namespace qpt
