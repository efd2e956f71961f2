#pragma once

#include <vector>

#include "qpt/errors.hpp"
#include "qpt/polarimetry.hpp"
#include "qpt/reconstruction.hpp"

namespace qpt {

/// U = [[A e^{i phi}, B e^{i psi}], [-B e^{-i psi}, A e^{-i phi}]], A, B >= 0, A^2 + B^2 = 1.
struct AmplitudePhase {
  double a = 1.0;
  double b = 0.0;
  double phi = 0.0;
  double psi = 0.0;
};

Unitary2 amplitude_phase_matrix(const AmplitudePhase& ap);
AmplitudePhase amplitude_phase_from_params(const GateParams& p);
/// Canonical (theta, n) of the gate described by ap.
GateParams params_from_amplitude_phase(const AmplitudePhase& ap);

/// Raised when A*B is too small for the phases to be trusted; carries the
/// best candidate found anyway.
class DegenerateGate : public Error {
 public:
  DegenerateGate(const std::string& what, GateParams best) : Error(what), best_(best) {}
  const GateParams& best() const { return best_; }

 private:
  GateParams best_;
};

/// Below this A*B the phase system is treated as ill-conditioned.
inline constexpr double kWellConditionedAB = 0.05;

/// Closed-form inversion of the six intensities. Throws NonPhysicalData when
/// an intensity or a recovered cosine/sine leaves its range, and DegenerateGate
/// when A*B < kWellConditionedAB and no candidate reproduces the data.
GateParams invert_six(const MeasurementSet& m);

/// The five-channel subset {LL, LH, LD, HL, HD}.
struct FiveIntensities {
  double ll = 0.0;
  double lh = 0.0;
  double ld = 0.0;
  double hl = 0.0;
  double hd = 0.0;

  static FiveIntensities from(const MeasurementSet& m);
};

/// Every gauge-distinct gate reproducing the five intensities to 1e-9.
/// One gate generically; two on the degenerate set. Throws NonPhysicalData
/// when nothing fits.
std::vector<GateParams> invert_five(const FiveIntensities& m);

/// Floor applied to theoretical intensities in the likelihood denominators.
inline constexpr double kLikelihoodFloor = 1e-9;

/// sum over channels of (I_th - I_exp)^2 / max(I_th, floor).
double log_likelihood(const GateParams& p, const MeasurementSet& m);

struct BaselineConfig {
  int restarts = 1;
  int max_evals = 2000;
  double tolerance = 1e-12;
  /// Initial simplex edge, radians, in every chart coordinate.
  double initial_step = 0.5;
};

/// Multi-start Nelder-Mead minimization of log_likelihood over
/// (theta, polar angle, azimuth) with theta clamped to [0, pi].
ReconstructionResult minimize_likelihood(const MeasurementSet& m, const BaselineConfig& cfg, Rng& rng);

}  // namespace qpt
