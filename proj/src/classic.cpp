#include "qpt/classic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "qpt/nelder_mead.hpp"

namespace qpt {

namespace {

constexpr double kRangeTolerance = 1e-9;  // intensities
constexpr double kTrigTolerance = 1e-6;   // recovered cosines and sines
constexpr double kFitTolerance = 1e-9;
constexpr double kDegenerateResidual = 1e-10;

void check_range(double v, const char* label) {
  if (!(v >= -kRangeTolerance && v <= 1.0 + kRangeTolerance)) {
    throw NonPhysicalData(std::string("intensity ") + label + " = " + std::to_string(v) +
                          " lies outside [0, 1]");
  }
}

double checked_trig(double v, const char* what) {
  if (!(std::abs(v) <= 1.0 + kTrigTolerance)) {
    throw NonPhysicalData(std::string("recovered ") + what + " = " + std::to_string(v) +
                          " lies outside [-1, 1]");
  }
  return std::clamp(v, -1.0, 1.0);
}

double six_residual(const GateParams& p, const MeasurementSet& m) {
  const MeasurementSet th = six_intensities_exact(p);
  double r = 0.0;
  for (std::size_t i = 0; i < 6; ++i) r += (th.values[i] - m.values[i]) * (th.values[i] - m.values[i]);
  return r;
}

double five_max_deviation(const GateParams& p, const FiveIntensities& m) {
  const MeasurementSet th = six_intensities_exact(p);
  return std::max({std::abs(th[Channel::LL] - m.ll), std::abs(th[Channel::LH] - m.lh),
                   std::abs(th[Channel::LD] - m.ld), std::abs(th[Channel::HL] - m.hl),
                   std::abs(th[Channel::HD] - m.hd)});
}

/// Candidates from the amplitude and the (sum, difference) phase pair. The
/// sum is unique; the difference is known up to sign.
std::vector<AmplitudePhase> general_candidates(double a, double b, double lh, double ld, double hl) {
  const double ab = a * b;
  const double cos_sum = checked_trig((0.5 - lh) / ab, "cos(phi + psi)");
  const double sin_sum = checked_trig((ld - 0.5) / ab, "sin(phi + psi)");
  const double cos_diff = checked_trig((hl - 0.5) / ab, "cos(phi - psi)");
  const double sum = std::atan2(sin_sum, cos_sum);
  const double diff = std::acos(cos_diff);
  return {{a, b, 0.5 * (sum + diff), 0.5 * (sum - diff)}, {a, b, 0.5 * (sum - diff), 0.5 * (sum + diff)}};
}

/// General candidates where they exist; near the pure branches rounding can
/// push the recovered cosines out of range, and those candidates are dropped.
void append_general_candidates(std::vector<AmplitudePhase>& out, double a, double b, double lh, double ld,
                               double hl) {
  if (a * b <= 0.0) return;
  try {
    for (const AmplitudePhase& ap : general_candidates(a, b, lh, ld, hl)) out.push_back(ap);
  } catch (const NonPhysicalData&) {
  }
}

}  // namespace

Unitary2 amplitude_phase_matrix(const AmplitudePhase& ap) {
  Unitary2 u;
  u.m = {std::polar(ap.a, ap.phi), std::polar(ap.b, ap.psi), -std::polar(ap.b, -ap.psi),
         std::polar(ap.a, -ap.phi)};
  return u;
}

AmplitudePhase amplitude_phase_from_params(const GateParams& p) {
  const double q0 = std::cos(p.theta);
  const double s = std::sin(p.theta);
  const double q1 = s * p.n[0], q2 = s * p.n[1], q3 = s * p.n[2];
  return {std::hypot(q0, q3), std::hypot(q1, q2), std::atan2(-q3, q0), std::atan2(-q1, -q2)};
}

GateParams params_from_amplitude_phase(const AmplitudePhase& ap) {
  const double q0 = ap.a * std::cos(ap.phi);
  const Vec3 q{-ap.b * std::sin(ap.psi), -ap.b * std::cos(ap.psi), -ap.a * std::sin(ap.phi)};
  const double r = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2]);
  if (r < 1e-14) return GateParams{};
  return canonicalize({std::atan2(r, q0), {q[0] / r, q[1] / r, q[2] / r}});
}

GateParams invert_six(const MeasurementSet& m) {
  for (Channel c : kChannels) check_range(m[c], channel_name(c).data());
  const double ll = std::clamp(m[Channel::LL], 0.0, 1.0);
  const double a = std::sqrt(ll);
  const double b = std::sqrt(1.0 - ll);
  const double ab = a * b;
  const double hh = m[Channel::HH];
  const double hd = m[Channel::HD];

  std::vector<AmplitudePhase> candidates;
  if (ab < kWellConditionedAB) {
    // Diagonal gate: I_HH = cos^2 phi, I_HD = 1/2 - sin(2 phi)/2.
    // Anti-diagonal gate: I_HH = sin^2 psi, I_HD = 1/2 + sin(2 psi)/2.
    if (b <= a) {
      candidates.push_back({1.0, 0.0, 0.5 * std::atan2(1.0 - 2.0 * hd, 2.0 * hh - 1.0), 0.0});
    } else {
      candidates.push_back({0.0, 1.0, 0.0, 0.5 * std::atan2(2.0 * hd - 1.0, 1.0 - 2.0 * hh)});
    }
    append_general_candidates(candidates, a, b, m[Channel::LH], m[Channel::LD], m[Channel::HL]);
  } else {
    candidates = general_candidates(a, b, m[Channel::LH], m[Channel::LD], m[Channel::HL]);
  }

  GateParams best;
  double best_residual = std::numeric_limits<double>::infinity();
  for (const AmplitudePhase& ap : candidates) {
    const GateParams p = params_from_amplitude_phase(ap);
    const double r = six_residual(p, m);
    if (r < best_residual) {
      best_residual = r;
      best = p;
    }
  }
  if (ab < kWellConditionedAB && best_residual > kDegenerateResidual) {
    throw DegenerateGate("A*B = " + std::to_string(ab) + " too small to resolve the phases", best);
  }
  return best;
}

FiveIntensities FiveIntensities::from(const MeasurementSet& m) {
  return {m[Channel::LL], m[Channel::LH], m[Channel::LD], m[Channel::HL], m[Channel::HD]};
}

std::vector<GateParams> invert_five(const FiveIntensities& m) {
  check_range(m.ll, "LL");
  check_range(m.lh, "LH");
  check_range(m.ld, "LD");
  check_range(m.hl, "HL");
  check_range(m.hd, "HD");
  const double ll = std::clamp(m.ll, 0.0, 1.0);
  const double a = std::sqrt(ll);
  const double b = std::sqrt(1.0 - ll);

  std::vector<AmplitudePhase> candidates;
  if (a * b < kWellConditionedAB) {
    // Near-pure gates: only I_HD carries the phase, through sin(2 phi) (or sin(2 psi)): two roots.
    if (b <= a) {
      const double s = std::asin(checked_trig(1.0 - 2.0 * m.hd, "sin(2 phi)"));
      candidates.push_back({1.0, 0.0, 0.5 * s, 0.0});
      candidates.push_back({1.0, 0.0, 0.5 * (kPi - s), 0.0});
    } else {
      const double s = std::asin(checked_trig(2.0 * m.hd - 1.0, "sin(2 psi)"));
      candidates.push_back({0.0, 1.0, 0.0, 0.5 * s});
      candidates.push_back({0.0, 1.0, 0.0, 0.5 * (kPi - s)});
    }
    append_general_candidates(candidates, a, b, m.lh, m.ld, m.hl);
  } else {
    candidates = general_candidates(a, b, m.lh, m.ld, m.hl);
  }

  std::vector<GateParams> out;
  for (const AmplitudePhase& ap : candidates) {
    const GateParams p = params_from_amplitude_phase(ap);
    if (five_max_deviation(p, m) > kFitTolerance) continue;
    const bool duplicate = std::any_of(out.begin(), out.end(), [&](const GateParams& q) {
      return fidelity(p, q) > 1.0 - 1e-12;
    });
    if (!duplicate) out.push_back(p);
  }
  if (out.empty()) throw NonPhysicalData("no gate reproduces the five intensities");
  return out;
}

double log_likelihood(const GateParams& p, const MeasurementSet& m) {
  const MeasurementSet th = six_intensities_exact(p);
  double total = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    const double d = th.values[i] - m.values[i];
    total += d * d / std::max(th.values[i], kLikelihoodFloor);
  }
  return total;
}

namespace {

GateParams chart_to_params(std::span<const double> x) {
  const double theta = std::clamp(x[0], 0.0, kPi);
  const double st = std::sin(x[1]);
  return {theta, {st * std::cos(x[2]), st * std::sin(x[2]), std::cos(x[1])}};
}

}  // namespace

ReconstructionResult minimize_likelihood(const MeasurementSet& m, const BaselineConfig& cfg, Rng& rng) {
  const auto t0 = std::chrono::steady_clock::now();
  const Objective cost = [&](std::span<const double> x) { return log_likelihood(chart_to_params(x), m); };
  const std::vector<double> step(3, cfg.initial_step);
  const NelderMeadOptions options{cfg.max_evals, cfg.tolerance, 1e-10};

  ReconstructionResult result;
  result.engine = "baseline";
  result.cost = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(cfg.restarts, 1); ++r) {
    std::vector<double> start{rng.uniform(0.0, kPi), std::acos(rng.uniform(-1.0, 1.0)),
                              rng.uniform(0.0, 2.0 * kPi)};
    const NelderMeadResult nm = nelder_mead(cost, std::move(start), step, options);
    result.evaluations += nm.evaluations;
    result.iterations += nm.iterations;
    if (nm.value < result.cost) {
      result.cost = nm.value;
      result.raw = chart_to_params(nm.x);
      result.converged = nm.converged;
    }
  }
  result.params = canonicalize(result.raw);
  result.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace qpt
