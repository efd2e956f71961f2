#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qpt/errors.hpp"
#include "qpt/polarimetry.hpp"
#include "qpt/reconstruction.hpp"

namespace qpt {

/// 6 -> 128 -> 128 -> 64 -> 64 -> 64 -> 64 -> 32 -> 16 -> 3
inline constexpr std::array<int, 10> kLayerWidths{6, 128, 128, 64, 64, 64, 64, 32, 16, 3};

enum class Activation : std::uint8_t { relu = 1, sigmoid = 2 };

struct DenseLayer {
  Eigen::MatrixXd weights;  // outputs x inputs
  Eigen::VectorXd bias;
  Activation activation = Activation::relu;
  /// Multiplicative Gaussian noise on this layer's activations while training.
  bool dropout = false;
};

struct TrainConfig {
  int epochs = 50;
  int batch_size = 256;
  int train_batches = 1 << 12;
  int validation_batches = 1 << 10;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int plateau_patience = 5;
  double plateau_factor = 0.1;
  double dropout_rate = 0.01;
  std::uint64_t seed = 0;
  bool desk_scale = false;
  GateMeasure measure = GateMeasure::haar;

  /// 10 epochs of 2^10 training batches; the rest as the full schedule.
  static TrainConfig desk();
  static TrainConfig full() { return {}; }
  void validate() const;
};

struct MlpModel {
  static constexpr std::uint32_t kFormatVersion = 1;

  std::vector<DenseLayer> layers;
  /// Echo of the configuration that produced the weights.
  TrainConfig config;

  /// Fan-in scaled uniform initialization, zero biases. ReLU hidden layers,
  /// sigmoid output; Gaussian dropout on every hidden layer.
  static MlpModel create(std::span<const int> widths, Rng& rng);
  std::vector<int> widths() const;
  std::size_t parameter_count() const;
  /// Throws MalformedModel on inconsistent dimensions.
  void check() const;
};

/// Affine map between sigmoid outputs and (theta, n_x, n_y); n_z >= 0 completes the unit vector.
struct OutputCodec {
  static constexpr double kThetaScale = kPi;
  static constexpr double kAxisScale = 2.0;
  static constexpr double kAxisOffset = -1.0;

  static Vec3 encode(const GateParams& p);
  /// Out-of-disk (n_x, n_y) are projected radially onto the unit circle.
  static GateParams decode(const Vec3& s);
};

/// Inputs as columns: rows are LL, HH, LH, LD, HL, HD.
Eigen::MatrixXd to_input_matrix(std::span<const MeasurementSet> ms);

/// Raw sigmoid outputs (3 x batch), dropout inactive.
Eigen::MatrixXd forward_raw(const MlpModel& model, const Eigen::MatrixXd& inputs);

GateParams forward(const MlpModel& model, const MeasurementSet& m);
std::vector<GateParams> forward_batch(const MlpModel& model, std::span<const MeasurementSet> ms);

/// Reconstruction with timing, for use next to the other engines.
ReconstructionResult nn_reconstruct(const MlpModel& model, const MeasurementSet& m);

struct TrainingBatch {
  Eigen::MatrixXd inputs;  // 6 x size
  Eigen::MatrixXd labels;  // 3 x size
  std::vector<GateParams> gates;
};

/// Gates drawn from `measure` restricted to n_z > 0, noiseless six
/// intensities as inputs, encoded (theta, n_x, n_y) as labels.
TrainingBatch generate_training_batch(int size, Rng& rng, GateMeasure measure = GateMeasure::haar);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> bias;
};

/// Per-layer multiplicative noise, one matrix (width x batch) per layer; an
/// empty matrix means no noise on that layer.
using DropoutNoise = std::vector<Eigen::MatrixXd>;

DropoutNoise sample_dropout_noise(const MlpModel& model, int batch, double rate, Rng& rng);

/// Mean squared error over outputs and batch; fills `grads` when non-null.
double loss_and_gradients(const MlpModel& model, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& labels,
                          const DropoutNoise* noise, Gradients* grads);

struct EpochLog {
  int epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
  double learning_rate = 0.0;
};

class TrainingFailure : public Error {
 public:
  TrainingFailure(const std::string& what, std::vector<EpochLog> log) : Error(what), log_(std::move(log)) {}
  const std::vector<EpochLog>& log() const { return log_; }

 private:
  std::vector<EpochLog> log_;
};

struct TrainingResult {
  MlpModel model;
  std::vector<EpochLog> log;
};

/// Adam on the MSE loss with plateau learning-rate reduction and Gaussian
/// dropout. The validation set is drawn once per run. Throws TrainingFailure
/// on a non-finite loss.
TrainingResult train(const TrainConfig& cfg, Rng& rng,
                     const std::function<void(const EpochLog&)>& on_epoch = {});

void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

/// CSV with a leading '#' line holding the optimizer settings.
void write_training_log(const std::vector<EpochLog>& log, const TrainConfig& cfg, const std::filesystem::path& path);

}  // namespace qpt
