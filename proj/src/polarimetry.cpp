#include "qpt/polarimetry.hpp"

#include <algorithm>
#include <cmath>

#include "qpt/errors.hpp"

namespace qpt {

namespace {

constexpr double kDeg = kPi / 180.0;
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

PolState apply_to(const Unitary2& u, const PolState& v) {
  return {u.m[0] * v[0] + u.m[1] * v[1], u.m[2] * v[0] + u.m[3] * v[1]};
}

cplx inner(const PolState& a, const PolState& b) {
  return std::conj(a[0]) * b[0] + std::conj(a[1]) * b[1];
}

/// Linear polarization with transmission axis at `angle` from x.
PolState linear_state(double angle) {
  return {std::polar(kInvSqrt2, -angle), std::polar(kInvSqrt2, angle)};
}

}  // namespace

Pol pol_from_char(char c) {
  switch (c) {
    case 'L': return Pol::L;
    case 'R': return Pol::R;
    case 'H': return Pol::H;
    case 'V': return Pol::V;
    case 'D': return Pol::D;
    case 'A': return Pol::A;
    default: throw InvalidParameter(std::string("unknown polarization label '") + c + "'");
  }
}

char pol_char(Pol p) {
  static constexpr char kNames[] = {'L', 'R', 'H', 'V', 'D', 'A'};
  return kNames[static_cast<int>(p)];
}

PolState basis_state(Pol p) {
  const cplx i{0.0, 1.0};
  switch (p) {
    case Pol::L: return {1.0, 0.0};
    case Pol::R: return {0.0, 1.0};
    case Pol::H: return {kInvSqrt2, kInvSqrt2};
    case Pol::V: return {kInvSqrt2, -kInvSqrt2};
    case Pol::D: return {kInvSqrt2, i * kInvSqrt2};
    case Pol::A: return {kInvSqrt2, -i * kInvSqrt2};
  }
  throw InvalidParameter("unknown polarization label");
}

double projective_intensity(const Unitary2& u, const PolState& in, const PolState& out) {
  return std::norm(inner(out, apply_to(u, in)));
}

Pol channel_input(Channel c) {
  switch (c) {
    case Channel::LL:
    case Channel::LH:
    case Channel::LD: return Pol::L;
    default: return Pol::H;
  }
}

Pol channel_output(Channel c) {
  switch (c) {
    case Channel::LL:
    case Channel::HL: return Pol::L;
    case Channel::HH:
    case Channel::LH: return Pol::H;
    default: return Pol::D;
  }
}

std::string_view channel_name(Channel c) {
  static constexpr std::string_view kNames[] = {"LL", "HH", "LH", "LD", "HL", "HD"};
  return kNames[static_cast<std::size_t>(c)];
}

MeasurementSet six_intensities_exact(const GateParams& p) {
  const auto [nx, ny, nz] = p.n;
  const double s = std::sin(p.theta);
  const double c = std::cos(p.theta);
  const double s2 = s * s;
  const double c2 = c * c;
  const double sin2t = std::sin(2.0 * p.theta);
  MeasurementSet m;
  m[Channel::LL] = nz * nz * s2 + c2;
  m[Channel::HH] = nx * nx * s2 + c2;
  m[Channel::LH] = 0.5 * (1.0 + 2.0 * nx * nz * s2 + ny * sin2t);
  m[Channel::LD] = 0.5 * (1.0 + 2.0 * ny * nz * s2 - nx * sin2t);
  m[Channel::HL] = 0.5 * (1.0 + 2.0 * nx * nz * s2 - ny * sin2t);
  m[Channel::HD] = 0.5 * (1.0 + 2.0 * nx * ny * s2 + nz * sin2t);
  return m;
}

MeasurementSet six_intensities_matrix(const Unitary2& u) {
  MeasurementSet m;
  for (Channel c : kChannels) {
    m[c] = projective_intensity(u, basis_state(channel_input(c)), basis_state(channel_output(c)));
  }
  return m;
}

int clamp_intensities(MeasurementSet& m) {
  int changed = 0;
  for (double& v : m.values) {
    const double c = std::clamp(v, 0.0, 1.0);
    if (c != v) {
      v = c;
      ++changed;
    }
  }
  return changed;
}

Unitary2 waveplate(double retardance, double axis_rad) {
  const double c = std::cos(0.5 * retardance);
  const double s = std::sin(0.5 * retardance);
  const cplx i{0.0, 1.0};
  Unitary2 w;
  w.m = {cplx{c}, i * s * std::polar(1.0, -2.0 * axis_rad), i * s * std::polar(1.0, 2.0 * axis_rad),
         cplx{c}};
  return w;
}

PolState prepared_state(double hwp_deg, double qwp_deg) {
  const Unitary2 stage = waveplate(kPi / 2.0, qwp_deg * kDeg) * waveplate(kPi, hwp_deg * kDeg);
  return apply_to(stage, basis_state(Pol::H));
}

PolState projected_state(double qwp_deg, double lp_deg) {
  // <lp| Q psi> = <Q^dagger lp | psi>
  return apply_to(waveplate(kPi / 2.0, qwp_deg * kDeg).adjoint(), linear_state(lp_deg * kDeg));
}

BenchSettings derive_bench_settings() {
  constexpr int kSteps = 8;
  constexpr double kStep = 22.5;
  constexpr double kTol = 1e-12;

  struct Pair {
    double a = 0.0;
    double b = 0.0;
  };
  auto search = [&](Pol target, bool preparation) {
    const PolState want = basis_state(target);
    for (int i = 0; i < kSteps; ++i) {
      for (int j = 0; j < kSteps; ++j) {
        const double a = i * kStep;
        const double b = j * kStep;
        const PolState got = preparation ? prepared_state(a, b) : projected_state(a, b);
        if (1.0 - std::norm(inner(want, got)) < kTol) return Pair{a, b};
      }
    }
    throw InternalError(std::string("no plate setting reaches state ") + pol_char(target));
  };

  BenchSettings settings;
  for (Channel c : kChannels) {
    const Pair prep = search(channel_input(c), true);
    const Pair proj = search(channel_output(c), false);
    settings[c] = {prep.a, prep.b, proj.a, proj.b};
  }
  return settings;
}

BenchSettings jitter_settings(const BenchSettings& nominal, const NoiseModel& noise, Rng& rng) {
  if (noise.delta_deg <= 0.0) return nominal;
  const double d = noise.delta_deg;
  BenchSettings out = nominal;
  auto draw = [&] { return rng.normal(0.0, d); };
  if (noise.shared_draw) {
    const double hwp = draw();
    const double qwp_in = draw();
    const double qwp_out = draw();
    const double lp = noise.include_lp_jitter ? draw() : 0.0;
    for (auto& s : out.channels) {
      s.prep_hwp_deg += hwp;
      s.prep_qwp_deg += qwp_in;
      s.proj_qwp_deg += qwp_out;
      s.proj_lp_deg += lp;
    }
    return out;
  }
  for (auto& s : out.channels) {
    s.prep_hwp_deg += draw();
    s.prep_qwp_deg += draw();
    s.proj_qwp_deg += draw();
    if (noise.include_lp_jitter) s.proj_lp_deg += draw();
  }
  return out;
}

MeasurementSet pipeline_intensities(const Unitary2& u, const BenchSettings& settings) {
  MeasurementSet m;
  for (Channel c : kChannels) {
    const ChannelSetting& s = settings[c];
    m[c] = projective_intensity(u, prepared_state(s.prep_hwp_deg, s.prep_qwp_deg),
                                projected_state(s.proj_qwp_deg, s.proj_lp_deg));
  }
  clamp_intensities(m);  // rounding only; projective intensities are physical
  return m;
}

MeasurementSet six_intensities_noisy(const Unitary2& u, const NoiseModel& noise,
                                     const BenchSettings& settings, Rng& rng) {
  return pipeline_intensities(u, jitter_settings(settings, noise, rng));
}

MeasurementSet six_intensities_noisy(const GateParams& p, const NoiseModel& noise,
                                     const BenchSettings& settings, Rng& rng) {
  return six_intensities_noisy(gate_matrix(p), noise, settings, rng);
}

}  // namespace qpt
