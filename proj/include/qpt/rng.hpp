#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace qpt {

/// Seedable pseudo-random stream. Identical seeds give identical streams on
/// the same build. Instances are not meant to be shared between threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Independent stream derived from a root seed, a label and an index, so
  /// that e.g. gate sampling and GA runs never consume each other's numbers.
  static Rng substream(std::uint64_t root, std::string_view label, std::uint64_t index = 0);

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal(double mean = 0.0, double stddev = 1.0) {
    return mean + stddev * std::normal_distribution<double>(0.0, 1.0)(engine_);
  }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

}  // namespace qpt
