#pragma once

#include <array>
#include <complex>

#include "qpt/rng.hpp"

namespace qpt {

using cplx = std::complex<double>;
using Vec3 = std::array<double, 3>;

inline constexpr double kPi = 3.14159265358979323846;

/// Rotation-angle / axis parametrization of an SU(2) gate,
/// U = exp(-i theta n.sigma), theta in [0, pi], |n| = 1.
struct GateParams {
  double theta = 0.0;
  Vec3 n{0.0, 0.0, 1.0};

  friend bool operator==(const GateParams&, const GateParams&) = default;
};

/// 2x2 complex matrix, row-major, in the circular basis (|L>, |R>).
struct Unitary2 {
  std::array<cplx, 4> m{cplx{1.0}, cplx{0.0}, cplx{0.0}, cplx{1.0}};

  cplx operator()(int row, int col) const { return m[static_cast<std::size_t>(2 * row + col)]; }
  cplx& operator()(int row, int col) { return m[static_cast<std::size_t>(2 * row + col)]; }

  static Unitary2 identity() { return {}; }
  Unitary2 adjoint() const;
  cplx determinant() const { return m[0] * m[3] - m[1] * m[2]; }
  cplx trace() const { return m[0] + m[3]; }
  Unitary2 operator-() const;

  friend bool operator==(const Unitary2&, const Unitary2&) = default;
};

Unitary2 operator*(const Unitary2& a, const Unitary2& b);

/// Tolerance on |n| for a well-formed GateParams.
inline constexpr double kNormTolerance = 1e-12;
/// Band around the n_z = 0 (and n_x = 0) great circles inside which the
/// canonical hemisphere falls back to the next tie-break component.
inline constexpr double kGaugeTieBand = 1e-12;

/// Throws InvalidParameter if |n| deviates from 1 or theta leaves [0, pi].
void validate(const GateParams& p);

/// (theta, n) -> (pi - theta, -n): same process up to the global sign.
GateParams gauge_flip(const GateParams& p);

/// Representative with n_z > 0 (tie-break n_x > 0, then n_y > 0); theta in
/// {0, pi} collapses to (0, (0, 0, 1)). Idempotent.
GateParams canonicalize(const GateParams& p);
bool is_canonical(const GateParams& p);

Unitary2 gate_matrix(const GateParams& p);

/// Inverse of gate_matrix up to the global sign; returns the canonical form.
/// Throws InvalidMatrix if u is not unitary with unit determinant.
GateParams params_from_matrix(const Unitary2& u, double tolerance = 1e-10);

/// Optical traversal order: b acts first.
inline Unitary2 compose(const Unitary2& a, const Unitary2& b) { return a * b; }

/// |Tr(a^dagger b)| / 2, clamped to [0, 1].
double fidelity(const Unitary2& a, const Unitary2& b);
double fidelity(const GateParams& a, const GateParams& b);

/// Max entry-wise deviation of u^dagger u from the identity.
double unitarity_error(const Unitary2& u);
double max_abs_diff(const Unitary2& a, const Unitary2& b);

enum class GateMeasure { haar, ball };

/// Haar-random gate: uniform unit quaternion (cos theta, n sin theta), canonicalized.
GateParams sample_haar(Rng& rng);
/// Uniform point d = theta n in the radius-pi ball, canonicalized.
GateParams sample_ball(Rng& rng);
GateParams sample_gate(Rng& rng, GateMeasure measure);

/// Uniform direction on the unit sphere.
Vec3 sample_direction(Rng& rng);

}  // namespace qpt
