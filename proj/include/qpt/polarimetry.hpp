#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

#include "qpt/rng.hpp"
#include "qpt/su2.hpp"

namespace qpt {

/// Jones vector (alpha, beta) in the circular basis.
using PolState = std::array<cplx, 2>;

enum class Pol { L, R, H, V, D, A };

Pol pol_from_char(char c);  // throws InvalidParameter on unknown labels
char pol_char(Pol p);
PolState basis_state(Pol p);

/// |<out|U|in>|^2
double projective_intensity(const Unitary2& u, const PolState& in, const PolState& out);

/// The six input/output combinations, in file order.
enum class Channel : std::size_t { LL = 0, HH, LH, LD, HL, HD };
inline constexpr std::array<Channel, 6> kChannels{Channel::LL, Channel::HH, Channel::LH,
                                                  Channel::LD, Channel::HL, Channel::HD};
Pol channel_input(Channel c);
Pol channel_output(Channel c);
std::string_view channel_name(Channel c);

/// Six normalized intensities I_ij = I / I0, ordered LL, HH, LH, LD, HL, HD.
struct MeasurementSet {
  std::array<double, 6> values{};

  double operator[](Channel c) const { return values[static_cast<std::size_t>(c)]; }
  double& operator[](Channel c) { return values[static_cast<std::size_t>(c)]; }

  friend bool operator==(const MeasurementSet&, const MeasurementSet&) = default;
};

/// Closed-form intensities of the six channels for the gate p.
MeasurementSet six_intensities_exact(const GateParams& p);
/// Same quantities evaluated from matrix elements |<j|U|i>|^2.
MeasurementSet six_intensities_matrix(const Unitary2& u);

/// Clamps every value into [0, 1]; returns the number of values changed.
int clamp_intensities(MeasurementSet& m);

struct NoiseModel {
  /// Standard deviation of the per-angle Gaussian jitter, degrees.
  double delta_deg = 0.0;
  bool include_lp_jitter = true;
  /// One jitter draw per element shared by all six channels instead of a fresh
  /// draw for every channel.
  bool shared_draw = false;
};

/// Waveplate of retardance `retardance` with optic axis at `axis_rad` from x.
Unitary2 waveplate(double retardance, double axis_rad);

/// Preparation (source |H> -> HWP -> QWP) and projection (QWP -> LP) angles, degrees.
struct ChannelSetting {
  double prep_hwp_deg = 0.0;
  double prep_qwp_deg = 0.0;
  double proj_qwp_deg = 0.0;
  double proj_lp_deg = 0.0;
};

struct BenchSettings {
  std::array<ChannelSetting, 6> channels{};

  const ChannelSetting& operator[](Channel c) const { return channels[static_cast<std::size_t>(c)]; }
  ChannelSetting& operator[](Channel c) { return channels[static_cast<std::size_t>(c)]; }
};

/// Polarization leaving the preparation stage.
PolState prepared_state(double hwp_deg, double qwp_deg);
/// State whose overlap the projection stage measures: QWP^dagger |LP axis>.
PolState projected_state(double qwp_deg, double lp_deg);

/// Plate angles that prepare / project every basis state from a horizontal
/// source. Found by search over the 22.5 degree lattice; throws InternalError
/// if a state cannot be reached to 1e-12.
BenchSettings derive_bench_settings();

/// Settings with every rotating element jittered by N(0, delta^2).
BenchSettings jitter_settings(const BenchSettings& nominal, const NoiseModel& noise, Rng& rng);

/// Intensities of the six channels measured through the plate pipeline.
MeasurementSet pipeline_intensities(const Unitary2& u, const BenchSettings& settings);

MeasurementSet six_intensities_noisy(const GateParams& p, const NoiseModel& noise,
                                     const BenchSettings& settings, Rng& rng);
MeasurementSet six_intensities_noisy(const Unitary2& u, const NoiseModel& noise,
                                     const BenchSettings& settings, Rng& rng);

}  // namespace qpt
