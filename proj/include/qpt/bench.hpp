#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "qpt/classic.hpp"
#include "qpt/ga.hpp"
#include "qpt/nn.hpp"

namespace qpt {

enum class Engine { analytic, baseline, ga, nn };

std::string_view engine_name(Engine e);
/// Throws InvalidParameter.
Engine engine_from_name(std::string_view name);

struct BenchmarkPlan {
  int gates = 1000;
  std::vector<double> deltas_deg{0.0, 1.0, 2.0, 5.0};
  std::vector<Engine> engines{Engine::baseline, Engine::ga, Engine::nn};
  GaConfig ga;
  /// Independent GA runs per gate; the lowest-cost one is kept.
  int ga_repeats = 1;
  BaselineConfig baseline;
  std::shared_ptr<const MlpModel> model;
  GateMeasure measure = GateMeasure::haar;
  /// One waveplate jitter draw shared by the six channels of a gate.
  bool shared_noise = false;
  std::uint64_t seed = 0;
  /// 0 uses every hardware thread.
  int threads = 0;

  void validate() const;
};

struct EngineStats {
  Engine engine = Engine::ga;
  double delta_deg = 0.0;
  std::vector<double> fidelities;
  std::vector<double> times_s;
  double mean_infidelity = 0.0;
  double fidelity_std = 0.0;
  /// Fraction of gates with 1 - F > 0.1.
  double tail_fraction = 0.0;
  double median_time_s = 0.0;
  /// Reconstructions the engine could not produce (counted with F = 0).
  int failures = 0;
};

/// Log-spaced infidelity bins over [1e-8, 1], four per decade. Values below
/// the first edge land in the first bin.
struct Histogram {
  static constexpr double kLow = 1e-8;
  static constexpr int kBinsPerDecade = 4;
  static constexpr int kBins = 8 * kBinsPerDecade;

  std::array<double, kBins + 1> edges{};
  std::array<int, kBins> counts{};

  Histogram();
  void add(double infidelity);
};

struct BenchmarkReport {
  static constexpr std::string_view kSchema = "qpt-benchmark-report v1";

  std::vector<EngineStats> rows;

  const EngineStats& find(Engine e, double delta_deg) const;
  /// engine,delta_deg,mean_infidelity,fidelity_std,tail_frac_gt_0p1,median_time_s,n
  std::string report_csv() const;
  /// engine,delta_deg,bin_lo,bin_hi,count
  std::string histogram_csv() const;
  /// engine,delta_deg,gate,fidelity,time_s
  std::string fidelities_csv() const;
  /// Bar chart of the infidelity histograms at one noise level.
  std::string histogram_svg(double delta_deg) const;
};

EngineStats summarize(Engine e, double delta_deg, std::vector<double> fidelities, std::vector<double> times_s);

BenchmarkReport run_benchmark(const BenchmarkPlan& plan);

}  // namespace qpt
