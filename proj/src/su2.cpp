#include "qpt/su2.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qpt/errors.hpp"

namespace qpt {

Unitary2 Unitary2::adjoint() const {
  Unitary2 r;
  r.m = {std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3])};
  return r;
}

Unitary2 Unitary2::operator-() const {
  Unitary2 r;
  for (std::size_t i = 0; i < 4; ++i) r.m[i] = -m[i];
  return r;
}

Unitary2 operator*(const Unitary2& a, const Unitary2& b) {
  Unitary2 r;
  r.m[0] = a.m[0] * b.m[0] + a.m[1] * b.m[2];
  r.m[1] = a.m[0] * b.m[1] + a.m[1] * b.m[3];
  r.m[2] = a.m[2] * b.m[0] + a.m[3] * b.m[2];
  r.m[3] = a.m[2] * b.m[1] + a.m[3] * b.m[3];
  return r;
}

void validate(const GateParams& p) {
  const double norm = std::sqrt(p.n[0] * p.n[0] + p.n[1] * p.n[1] + p.n[2] * p.n[2]);
  if (!std::isfinite(p.theta) || !std::isfinite(norm) || std::abs(norm - 1.0) > kNormTolerance) {
    throw InvalidParameter("gate axis must be a unit vector (|n| = " + std::to_string(norm) + ")");
  }
  if (p.theta < 0.0 || p.theta > kPi) {
    throw InvalidParameter("gate angle must lie in [0, pi] (theta = " + std::to_string(p.theta) + ")");
  }
}

GateParams gauge_flip(const GateParams& p) {
  return {kPi - p.theta, {-p.n[0], -p.n[1], -p.n[2]}};
}

namespace {

int hemisphere_sign(const Vec3& n) {
  auto sign = [](double v) { return v > kGaugeTieBand ? 1 : (v < -kGaugeTieBand ? -1 : 0); };
  int s = sign(n[2]);
  if (s == 0) s = sign(n[0]);
  if (s == 0) s = sign(n[1]);
  return s;
}

}  // namespace

GateParams canonicalize(const GateParams& p) {
  if (p.theta <= 0.0 || p.theta >= kPi) return GateParams{};
  if (hemisphere_sign(p.n) >= 0) return p;
  return gauge_flip(p);
}

bool is_canonical(const GateParams& p) {
  if (p.theta <= 0.0 || p.theta >= kPi) return p == GateParams{};
  return hemisphere_sign(p.n) > 0;
}

Unitary2 gate_matrix(const GateParams& p) {
  validate(p);
  const double c = std::cos(p.theta);
  const double s = std::sin(p.theta);
  const auto [nx, ny, nz] = p.n;
  Unitary2 u;
  u.m[0] = {c, -s * nz};
  u.m[1] = {-s * ny, -s * nx};  // -i s (nx - i ny)
  u.m[2] = {s * ny, -s * nx};   // -i s (nx + i ny)
  u.m[3] = {c, s * nz};
  return u;
}

double unitarity_error(const Unitary2& u) {
  const Unitary2 g = u.adjoint() * u;
  return max_abs_diff(g, Unitary2::identity());
}

double max_abs_diff(const Unitary2& a, const Unitary2& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < 4; ++i) e = std::max(e, std::abs(a.m[i] - b.m[i]));
  return e;
}

GateParams params_from_matrix(const Unitary2& u, double tolerance) {
  const double uerr = unitarity_error(u);
  const double derr = std::abs(u.determinant() - 1.0);
  if (!(uerr <= tolerance) || !(derr <= tolerance)) {
    throw InvalidMatrix("matrix is not in SU(2) (unitarity error " + std::to_string(uerr) +
                        ", determinant error " + std::to_string(derr) + ")");
  }
  const double c = 0.5 * (u.m[0].real() + u.m[3].real());
  const Vec3 v{-0.5 * (u.m[1].imag() + u.m[2].imag()), 0.5 * (u.m[2].real() - u.m[1].real()),
               0.5 * (u.m[3].imag() - u.m[0].imag())};
  const double s = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  if (s < 1e-14) return GateParams{};
  GateParams p{std::atan2(s, c), {v[0] / s, v[1] / s, v[2] / s}};
  return canonicalize(p);
}

double fidelity(const Unitary2& a, const Unitary2& b) {
  cplx tr = 0.0;
  for (std::size_t i = 0; i < 4; ++i) tr += std::conj(a.m[i]) * b.m[i];
  return std::clamp(0.5 * std::abs(tr), 0.0, 1.0);
}

double fidelity(const GateParams& a, const GateParams& b) {
  return fidelity(gate_matrix(a), gate_matrix(b));
}

Vec3 sample_direction(Rng& rng) {
  for (;;) {
    const Vec3 g{rng.normal(), rng.normal(), rng.normal()};
    const double r = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
    if (r > 1e-12) return {g[0] / r, g[1] / r, g[2] / r};
  }
}

GateParams sample_haar(Rng& rng) {
  for (;;) {
    const double q0 = rng.normal();
    const Vec3 q{rng.normal(), rng.normal(), rng.normal()};
    const double r = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2]);
    if (r < 1e-12) continue;
    // Overall quaternion scale drops out of atan2.
    GateParams p{std::atan2(r, q0), {q[0] / r, q[1] / r, q[2] / r}};
    return canonicalize(p);
  }
}

GateParams sample_ball(Rng& rng) {
  const double theta = kPi * std::cbrt(rng.uniform());
  return canonicalize({theta, sample_direction(rng)});
}

GateParams sample_gate(Rng& rng, GateMeasure measure) {
  return measure == GateMeasure::haar ? sample_haar(rng) : sample_ball(rng);
}

}  // namespace qpt
