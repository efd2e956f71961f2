#pragma once

#include <functional>
#include <span>
#include <vector>

namespace qpt {

struct NelderMeadOptions {
  int max_evals = 2000;
  /// Stop once the spread of vertex values and the simplex diameter both drop below these.
  double f_tolerance = 1e-14;
  double x_tolerance = 1e-10;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  /// Best value among the vertices of the starting simplex.
  double start_value = 0.0;
  int evaluations = 0;
  int iterations = 0;
  bool converged = false;
};

using Objective = std::function<double(std::span<const double>)>;

/// Downhill simplex (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
/// The starting simplex is `start` plus one vertex per coordinate offset by `step`.
NelderMeadResult nelder_mead(const Objective& f, std::vector<double> start, std::span<const double> step,
                             const NelderMeadOptions& options);

}  // namespace qpt
