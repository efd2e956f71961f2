#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qpt/ga.hpp"
#include "qpt/nn.hpp"
#include "qpt/polarimetry.hpp"

namespace qpt {

/// Patterned plate with optic axis alpha = pi * coordinate / period.
struct GPlate {
  enum class Axis { x, y };
  Axis axis = Axis::x;
  double retardance = kPi;
  double period_mm = 5.0;
};

/// Plate with a uniform optic axis.
struct UniformPlate {
  double retardance = kPi;
  double axis_rad = 0.0;
};

using PlateElement = std::variant<GPlate, UniformPlate>;

/// Elements in the order light traverses them.
struct PlateSpec {
  std::vector<PlateElement> elements;

  void validate() const;
  /// Operator-product notation, leftmost element last: "gy:pi/4*gx:pi*w:pi/2".
  std::string describe() const;
  static PlateSpec parse(std::string_view text);
};

struct GridGeometry {
  int width = 73;
  int height = 73;
  double pitch_mm = 0.1;

  void validate() const;
  /// Physical coordinates of a pixel centre; the grid centre sits on the optical axis.
  double x_mm(int col) const { return (col - 0.5 * (width - 1)) * pitch_mm; }
  double y_mm(int row) const { return (0.5 * (height - 1) - row) * pitch_mm; }
  std::size_t pixels() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

/// Row-major H x W grid.
template <typename T>
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<T> cells;

  Grid() = default;
  Grid(int w, int h, T fill = T{}) : width(w), height(h), cells(static_cast<std::size_t>(w) * h, fill) {}
  T& at(int row, int col) { return cells[static_cast<std::size_t>(row) * width + col]; }
  const T& at(int row, int col) const { return cells[static_cast<std::size_t>(row) * width + col]; }
};

struct FrameSet {
  GridGeometry geometry;
  /// Indexed by Channel.
  std::array<Grid<double>, 6> frames;
  double delta_deg = 0.0;
  std::uint64_t seed = 0;
  std::string description;

  Grid<double>& frame(Channel c) { return frames[static_cast<std::size_t>(c)]; }
  const Grid<double>& frame(Channel c) const { return frames[static_cast<std::size_t>(c)]; }
  MeasurementSet pixel(int row, int col) const;
  /// Throws GeometryError if frames disagree with the geometry or each other.
  void validate() const;
};

struct ParamMap {
  GridGeometry geometry;
  Grid<GateParams> params;
  std::optional<Grid<double>> cost;
  std::optional<Grid<double>> fidelity;

  explicit ParamMap(const GridGeometry& g = {}) : geometry(g), params(g.width, g.height) {}
};

struct ContinuityConfig {
  /// Chebyshev radius of the seeding neighbourhood; 0 runs every pixel independently.
  int radius = 2;
  double epsilon = 0.2;
  int generations_origin = 60;
  int generations = 10;

  void validate() const;
};

/// Product of the plate matrices at (x, y); the first element acts first.
Unitary2 plate_unitary(const PlateSpec& spec, double x_mm, double y_mm);

/// Canonical parameters at every pixel centre.
ParamMap truth_map(const PlateSpec& spec, const GridGeometry& geom);

struct SimulationOptions {
  NoiseModel noise;
  /// Draw fresh plate jitter for every pixel instead of once per frame.
  bool per_pixel_noise = false;
};

FrameSet simulate_frames(const PlateSpec& spec, const GridGeometry& geom, const SimulationOptions& opts, Rng& rng);

/// Block-mean binning; raw dimensions must be integer multiples of the target.
FrameSet downsample_frames(const FrameSet& raw, const GridGeometry& target);

/// Pixel-by-pixel GA in row-major order. Pixels without already-processed
/// neighbours start from a random population; the others start from
/// perturbed copies of their neighbours' best solutions.
ParamMap reconstruct_map_ga(const FrameSet& frames, const GaConfig& cfg, const ContinuityConfig& cont, Rng& rng);

/// Per-pixel network predictions followed by gauge fixing.
ParamMap reconstruct_map_nn(const FrameSet& frames, const MlpModel& model);

/// Row-major pass flipping a pixel to (pi - theta, -n) whenever that is
/// strictly closer to its left (else upper) neighbour. Returns the number of flips.
int gauge_fix(Grid<GateParams>& params);

/// Euclidean distance between (theta, n) four-vectors.
double param_distance(const GateParams& a, const GateParams& b);

struct MapFidelity {
  Grid<double> per_pixel;
  double mean = 0.0;
};

MapFidelity map_fidelity(const ParamMap& a, const ParamMap& b);

}  // namespace qpt
