#include "qpt/nn.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace qpt {

TrainConfig TrainConfig::desk() {
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.train_batches = 1 << 10;
  cfg.desk_scale = true;
  return cfg;
}

void TrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1 || train_batches < 1 || validation_batches < 1 || plateau_patience < 1) {
    throw InvalidParameter("training counts must be positive");
  }
  if (!(learning_rate > 0.0) || !(plateau_factor > 0.0 && plateau_factor <= 1.0)) {
    throw InvalidParameter("learning rate must be positive and the plateau factor in (0, 1]");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw InvalidParameter("dropout rate must lie in [0, 1)");
}

MlpModel MlpModel::create(std::span<const int> widths, Rng& rng) {
  if (widths.size() < 2) throw MalformedModel("a network needs at least an input and an output width");
  MlpModel model;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int in = widths[l];
    const int out = widths[l + 1];
    const bool last = l + 2 == widths.size();
    DenseLayer layer;
    layer.activation = last ? Activation::sigmoid : Activation::relu;
    layer.dropout = !last;
    const double limit = std::sqrt((last ? 3.0 : 6.0) / in);
    layer.weights.resize(out, in);
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) layer.weights(r, c) = rng.uniform(-limit, limit);
    }
    layer.bias = Eigen::VectorXd::Zero(out);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

std::vector<int> MlpModel::widths() const {
  std::vector<int> w;
  if (layers.empty()) return w;
  w.push_back(static_cast<int>(layers.front().weights.cols()));
  for (const DenseLayer& l : layers) w.push_back(static_cast<int>(l.weights.rows()));
  return w;
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

void MlpModel::check() const {
  if (layers.empty()) throw MalformedModel("model has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const DenseLayer& layer = layers[l];
    if (layer.bias.size() != layer.weights.rows()) throw MalformedModel("bias width does not match layer");
    if (l > 0 && layer.weights.cols() != layers[l - 1].weights.rows()) {
      throw MalformedModel("layer " + std::to_string(l) + " input width does not match previous layer");
    }
  }
  if (layers.front().weights.cols() != 6) throw MalformedModel("model input width must be 6");
  if (layers.back().weights.rows() != 3) throw MalformedModel("model output width must be 3");
}

Vec3 OutputCodec::encode(const GateParams& p) {
  return {p.theta / kThetaScale, (p.n[0] - kAxisOffset) / kAxisScale, (p.n[1] - kAxisOffset) / kAxisScale};
}

GateParams OutputCodec::decode(const Vec3& s) {
  const double theta = kThetaScale * std::clamp(s[0], 0.0, 1.0);
  double nx = kAxisScale * s[1] + kAxisOffset;
  double ny = kAxisScale * s[2] + kAxisOffset;
  const double rho2 = nx * nx + ny * ny;
  double nz = 0.0;
  if (rho2 >= 1.0) {
    const double rho = std::sqrt(rho2);
    nx /= rho;
    ny /= rho;
  } else {
    nz = std::sqrt(1.0 - rho2);
  }
  const double r = std::sqrt(nx * nx + ny * ny + nz * nz);
  return {theta, {nx / r, ny / r, nz / r}};
}

Eigen::MatrixXd to_input_matrix(std::span<const MeasurementSet> ms) {
  Eigen::MatrixXd x(6, static_cast<Eigen::Index>(ms.size()));
  for (std::size_t j = 0; j < ms.size(); ++j) {
    for (std::size_t i = 0; i < 6; ++i) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = ms[j].values[i];
  }
  return x;
}

namespace {

void activate(Activation a, Eigen::MatrixXd& z) {
  if (a == Activation::relu) {
    z = z.cwiseMax(0.0);
  } else {
    z = (1.0 + (-z.array()).exp()).inverse().matrix();
  }
}

}  // namespace

Eigen::MatrixXd forward_raw(const MlpModel& model, const Eigen::MatrixXd& inputs) {
  Eigen::MatrixXd a = inputs;
  Eigen::MatrixXd z;
  for (const DenseLayer& layer : model.layers) {
    if (layer.weights.cols() != a.rows()) throw MalformedModel("input width does not match the model");
    z.noalias() = layer.weights * a;
    z.colwise() += layer.bias;
    activate(layer.activation, z);
    a.swap(z);
  }
  return a;
}

GateParams forward(const MlpModel& model, const MeasurementSet& m) {
  thread_local Eigen::VectorXd a;
  thread_local Eigen::VectorXd z;
  a = Eigen::Map<const Eigen::VectorXd>(m.values.data(), 6);
  for (const DenseLayer& layer : model.layers) {
    if (layer.weights.cols() != a.size()) throw MalformedModel("input width does not match the model");
    z.noalias() = layer.weights * a;
    z += layer.bias;
    if (layer.activation == Activation::relu) {
      z = z.cwiseMax(0.0);
    } else {
      z = (1.0 + (-z.array()).exp()).inverse().matrix();
    }
    a.swap(z);
  }
  if (a.size() != 3) throw MalformedModel("model output width must be 3");
  return OutputCodec::decode({a[0], a[1], a[2]});
}

std::vector<GateParams> forward_batch(const MlpModel& model, std::span<const MeasurementSet> ms) {
  const Eigen::MatrixXd out = forward_raw(model, to_input_matrix(ms));
  if (out.rows() != 3) throw MalformedModel("model output width must be 3");
  std::vector<GateParams> ps;
  ps.reserve(ms.size());
  for (Eigen::Index j = 0; j < out.cols(); ++j) ps.push_back(OutputCodec::decode({out(0, j), out(1, j), out(2, j)}));
  return ps;
}

ReconstructionResult nn_reconstruct(const MlpModel& model, const MeasurementSet& m) {
  const auto t0 = std::chrono::steady_clock::now();
  ReconstructionResult r;
  r.raw = forward(model, m);
  r.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.params = canonicalize(r.raw);
  r.engine = "nn";
  r.evaluations = 1;
  r.cost = 0.0;
  const MeasurementSet th = six_intensities_exact(r.raw);
  for (std::size_t i = 0; i < 6; ++i) r.cost += (th.values[i] - m.values[i]) * (th.values[i] - m.values[i]);
  return r;
}

TrainingBatch generate_training_batch(int size, Rng& rng, GateMeasure measure) {
  TrainingBatch batch;
  batch.inputs.resize(6, size);
  batch.labels.resize(3, size);
  batch.gates.reserve(static_cast<std::size_t>(size));
  for (int j = 0; j < size; ++j) {
    GateParams p = sample_gate(rng, measure);
    while (!(p.n[2] > 0.0)) p = sample_gate(rng, measure);
    const MeasurementSet m = six_intensities_exact(p);
    for (int i = 0; i < 6; ++i) batch.inputs(i, j) = m.values[static_cast<std::size_t>(i)];
    const Vec3 s = OutputCodec::encode(p);
    for (int i = 0; i < 3; ++i) batch.labels(i, j) = s[static_cast<std::size_t>(i)];
    batch.gates.push_back(p);
  }
  return batch;
}

DropoutNoise sample_dropout_noise(const MlpModel& model, int batch, double rate, Rng& rng) {
  DropoutNoise noise(model.layers.size());
  if (rate <= 0.0) return noise;
  const double sd = std::sqrt(rate / (1.0 - rate));
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    if (!model.layers[l].dropout) continue;
    Eigen::MatrixXd& m = noise[l];
    m.resize(model.layers[l].weights.rows(), batch);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.normal(1.0, sd);
    }
  }
  return noise;
}

double loss_and_gradients(const MlpModel& model, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& labels,
                          const DropoutNoise* noise, Gradients* grads) {
  const std::size_t depth = model.layers.size();
  // acts[l] is the input of layer l (after activation and noise of layer l-1).
  std::vector<Eigen::MatrixXd> acts(depth + 1);
  std::vector<Eigen::MatrixXd> pre(depth);
  acts[0] = inputs;
  for (std::size_t l = 0; l < depth; ++l) {
    const DenseLayer& layer = model.layers[l];
    pre[l].noalias() = layer.weights * acts[l];
    pre[l].colwise() += layer.bias;
    acts[l + 1] = pre[l];
    activate(layer.activation, acts[l + 1]);
    if (noise && l < noise->size() && (*noise)[l].size() > 0) acts[l + 1].array() *= (*noise)[l].array();
  }
  const Eigen::MatrixXd diff = acts[depth] - labels;
  const double count = static_cast<double>(diff.size());
  const double loss = diff.squaredNorm() / count;
  if (!grads) return loss;

  grads->weights.resize(depth);
  grads->bias.resize(depth);
  Eigen::MatrixXd delta = (2.0 / count) * diff;  // dL/d(output of last layer)
  for (std::size_t l = depth; l-- > 0;) {
    const DenseLayer& layer = model.layers[l];
    if (noise && l < noise->size() && (*noise)[l].size() > 0) delta.array() *= (*noise)[l].array();
    if (layer.activation == Activation::relu) {
      delta = (pre[l].array() > 0.0).select(delta, 0.0);
    } else {
      // Noise is never applied to the sigmoid output layer, so acts[l + 1] is the sigmoid value.
      const Eigen::ArrayXXd s = acts[l + 1].array();
      delta = (delta.array() * s * (1.0 - s)).matrix();
    }
    grads->weights[l].noalias() = delta * acts[l].transpose();
    grads->bias[l] = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd next;
      next.noalias() = layer.weights.transpose() * delta;
      delta.swap(next);
    }
  }
  return loss;
}

namespace {

struct AdamState {
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;
  long step = 0;

  explicit AdamState(const MlpModel& model) {
    for (const DenseLayer& l : model.layers) {
      m_w.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
      v_w.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
      m_b.push_back(Eigen::VectorXd::Zero(l.bias.size()));
      v_b.push_back(Eigen::VectorXd::Zero(l.bias.size()));
    }
  }

  void apply(MlpModel& model, const Gradients& g, const TrainConfig& cfg, double lr) {
    ++step;
    const double b1 = cfg.adam_beta1;
    const double b2 = cfg.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
    auto update = [&](auto& param, auto& m, auto& v, const auto& grad) {
      m = b1 * m + (1.0 - b1) * grad;
      v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
      param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.adam_epsilon);
    };
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      update(model.layers[l].weights, m_w[l], v_w[l], g.weights[l]);
      update(model.layers[l].bias, m_b[l], v_b[l], g.bias[l]);
    }
  }
};

}  // namespace

TrainingResult train(const TrainConfig& cfg, Rng& rng, const std::function<void(const EpochLog&)>& on_epoch) {
  cfg.validate();
  TrainingResult result;
  result.model = MlpModel::create(kLayerWidths, rng);
  result.model.config = cfg;
  MlpModel& model = result.model;

  std::vector<TrainingBatch> validation;
  validation.reserve(static_cast<std::size_t>(cfg.validation_batches));
  for (int b = 0; b < cfg.validation_batches; ++b) {
    validation.push_back(generate_training_batch(cfg.batch_size, rng, cfg.measure));
  }

  AdamState adam(model);
  Gradients grads;
  double lr = cfg.learning_rate;
  double best_val = std::numeric_limits<double>::infinity();
  int stale = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double train_sum = 0.0;
    for (int b = 0; b < cfg.train_batches; ++b) {
      const TrainingBatch batch = generate_training_batch(cfg.batch_size, rng, cfg.measure);
      const DropoutNoise noise = sample_dropout_noise(model, cfg.batch_size, cfg.dropout_rate, rng);
      const double loss = loss_and_gradients(model, batch.inputs, batch.labels, &noise, &grads);
      if (!std::isfinite(loss)) {
        throw TrainingFailure("non-finite training loss in epoch " + std::to_string(epoch), result.log);
      }
      train_sum += loss;
      adam.apply(model, grads, cfg, lr);
    }
    double val_sum = 0.0;
    for (const TrainingBatch& batch : validation) {
      val_sum += loss_and_gradients(model, batch.inputs, batch.labels, nullptr, nullptr);
    }
    const double val = val_sum / static_cast<double>(validation.size());
    result.log.push_back({epoch, train_sum / cfg.train_batches, val, lr});
    if (!std::isfinite(val)) throw TrainingFailure("non-finite validation loss", result.log);
    if (on_epoch) on_epoch(result.log.back());

    if (val < best_val) {
      best_val = val;
      stale = 0;
    } else if (++stale >= cfg.plateau_patience) {
      lr *= cfg.plateau_factor;
      stale = 0;
    }
  }
  return result;
}

// --- Model container -------------------------------------------------------
//
// Little-endian throughout:
//   magic[8] = "QPTMLP\0\0", u32 version, u32 layer count L,
//   u32 widths[L + 1], u8 activation[L], u8 dropout[L],
//   f64 codec (theta scale, axis scale, axis offset),
//   training echo: u32 epochs, u32 batch, u32 train batches, u32 validation
//   batches, f64 learning rate, f64 beta1, f64 beta2, f64 epsilon,
//   u32 patience, f64 factor, f64 dropout rate, u8 desk, u8 measure, u64 seed,
//   then per layer the row-major weights (out x in) and the bias, as f64.

namespace {

constexpr char kMagic[8] = {'Q', 'P', 'T', 'M', 'L', 'P', '\0', '\0'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  const std::vector<char>& data() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> data) : buf_(std::move(data)) {}
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw CorruptModelFile("model file is truncated");
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(buf_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_++])) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void bytes(void* out, std::size_t n) {
    need(n);
    std::memcpy(out, buf_.data() + pos_, n);
    pos_ += n;
  }
  bool at_end() const { return pos_ == buf_.size(); }

 private:
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  model.check();
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(MlpModel::kFormatVersion);
  w.u32(static_cast<std::uint32_t>(model.layers.size()));
  for (int width : model.widths()) w.u32(static_cast<std::uint32_t>(width));
  for (const DenseLayer& l : model.layers) w.u8(static_cast<std::uint8_t>(l.activation));
  for (const DenseLayer& l : model.layers) w.u8(l.dropout ? 1 : 0);
  w.f64(OutputCodec::kThetaScale);
  w.f64(OutputCodec::kAxisScale);
  w.f64(OutputCodec::kAxisOffset);
  const TrainConfig& c = model.config;
  w.u32(static_cast<std::uint32_t>(c.epochs));
  w.u32(static_cast<std::uint32_t>(c.batch_size));
  w.u32(static_cast<std::uint32_t>(c.train_batches));
  w.u32(static_cast<std::uint32_t>(c.validation_batches));
  w.f64(c.learning_rate);
  w.f64(c.adam_beta1);
  w.f64(c.adam_beta2);
  w.f64(c.adam_epsilon);
  w.u32(static_cast<std::uint32_t>(c.plateau_patience));
  w.f64(c.plateau_factor);
  w.f64(c.dropout_rate);
  w.u8(c.desk_scale ? 1 : 0);
  w.u8(c.measure == GateMeasure::haar ? 0 : 1);
  w.u64(c.seed);
  for (const DenseLayer& l : model.layers) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index col = 0; col < l.weights.cols(); ++col) w.f64(l.weights(r, col));
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) w.f64(l.bias[r]);
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
  if (!out) throw IoError("failed writing " + path.string());
}

MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file " + path.string());
  std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(std::move(data));

  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw CorruptModelFile("not a model file: bad magic");
  const std::uint32_t version = r.u32();
  if (version != MlpModel::kFormatVersion) {
    throw ModelVersionError("model format version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(MlpModel::kFormatVersion) + ")");
  }
  const std::uint32_t depth = r.u32();
  if (depth == 0 || depth > 64) throw CorruptModelFile("implausible layer count");
  std::vector<int> widths(depth + 1);
  for (int& w : widths) {
    w = static_cast<int>(r.u32());
    if (w <= 0 || w > 1 << 16) throw CorruptModelFile("implausible layer width");
  }
  MlpModel model;
  model.layers.resize(depth);
  for (DenseLayer& l : model.layers) {
    const std::uint8_t a = r.u8();
    if (a != static_cast<std::uint8_t>(Activation::relu) && a != static_cast<std::uint8_t>(Activation::sigmoid)) {
      throw CorruptModelFile("unknown activation tag");
    }
    l.activation = static_cast<Activation>(a);
  }
  for (DenseLayer& l : model.layers) l.dropout = r.u8() != 0;
  const double theta_scale = r.f64();
  const double axis_scale = r.f64();
  const double axis_offset = r.f64();
  if (theta_scale != OutputCodec::kThetaScale || axis_scale != OutputCodec::kAxisScale ||
      axis_offset != OutputCodec::kAxisOffset) {
    throw MalformedModel("model was trained with a different output codec");
  }
  TrainConfig& c = model.config;
  c.epochs = static_cast<int>(r.u32());
  c.batch_size = static_cast<int>(r.u32());
  c.train_batches = static_cast<int>(r.u32());
  c.validation_batches = static_cast<int>(r.u32());
  c.learning_rate = r.f64();
  c.adam_beta1 = r.f64();
  c.adam_beta2 = r.f64();
  c.adam_epsilon = r.f64();
  c.plateau_patience = static_cast<int>(r.u32());
  c.plateau_factor = r.f64();
  c.dropout_rate = r.f64();
  c.desk_scale = r.u8() != 0;
  c.measure = r.u8() == 0 ? GateMeasure::haar : GateMeasure::ball;
  c.seed = r.u64();
  for (std::size_t l = 0; l < depth; ++l) {
    DenseLayer& layer = model.layers[l];
    layer.weights.resize(widths[l + 1], widths[l]);
    for (Eigen::Index row = 0; row < layer.weights.rows(); ++row) {
      for (Eigen::Index col = 0; col < layer.weights.cols(); ++col) layer.weights(row, col) = r.f64();
    }
    layer.bias.resize(widths[l + 1]);
    for (Eigen::Index row = 0; row < layer.bias.size(); ++row) layer.bias[row] = r.f64();
  }
  if (!r.at_end()) throw CorruptModelFile("trailing bytes after the last layer");
  model.check();
  return model;
}

void write_training_log(const std::vector<EpochLog>& log, const TrainConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.precision(17);
  out << "# adam beta1=" << cfg.adam_beta1 << " beta2=" << cfg.adam_beta2 << " epsilon=" << cfg.adam_epsilon
      << " lr0=" << cfg.learning_rate << " batch=" << cfg.batch_size << " seed=" << cfg.seed << '\n';
  out << "epoch,train_mse,val_mse,learning_rate\n";
  for (const EpochLog& e : log) {
    out << e.epoch << ',' << e.train_mse << ',' << e.val_mse << ',' << e.learning_rate << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace qpt
