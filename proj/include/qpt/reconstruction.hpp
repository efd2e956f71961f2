#pragma once

#include <string>

#include "qpt/su2.hpp"

namespace qpt {

/// Outcome of one single-gate reconstruction by any engine.
struct ReconstructionResult {
  /// Canonical estimate.
  GateParams params;
  /// Estimate in the gauge the engine actually produced (GA individuals are
  /// not canonicalized; spatial continuity relies on that).
  GateParams raw;
  /// Final value of the engine's own cost function.
  double cost = 0.0;
  double elapsed_s = 0.0;
  std::string engine;
  int iterations = 0;
  int evaluations = 0;
  bool converged = true;
};

}  // namespace qpt
