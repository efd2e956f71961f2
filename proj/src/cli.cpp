#include "qpt/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>

#include "qpt/bench.hpp"
#include "qpt/classic.hpp"
#include "qpt/ga.hpp"
#include "qpt/io.hpp"
#include "qpt/nn.hpp"
#include "qpt/spatial.hpp"

namespace qpt::cli {

namespace fs = std::filesystem;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const InvalidParameter*>(&e)) return kUsage;
  if (dynamic_cast<const IoError*>(&e)) return kIo;
  if (dynamic_cast<const TrainingFailure*>(&e) || dynamic_cast<const InternalError*>(&e)) return kNumerical;
  if (dynamic_cast<const FormatError*>(&e) || dynamic_cast<const NonPhysicalData*>(&e) ||
      dynamic_cast<const GeometryError*>(&e) || dynamic_cast<const MalformedModel*>(&e) ||
      dynamic_cast<const DegenerateGate*>(&e) || dynamic_cast<const InvalidMatrix*>(&e)) {
    return kData;
  }
  return kNumerical;
}

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Root random seed")->capture_default_str();
  cmd->add_option("--out", c.out, "Output path");
  // Expanded by expand_config before parsing; declared for the help text.
  cmd->add_option("--config", "Key-value file with flag values (key=value per line)");
}

bool given(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

/// Replaces "--config FILE" by the flags it lists. Flags given on the command
/// line take precedence over the file.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::string file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file");
      file = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (file.empty() || rest.empty()) return rest;

  std::ifstream in(file);
  if (!in) throw IoError("cannot open config file '" + file + "'");
  std::vector<std::string> extra;
  std::string line;
  while (std::getline(in, line)) {
    const std::string_view t = trim_ws(line);
    if (t.empty() || t.front() == '#' || t.front() == '[') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw UsageError("config line without '=': " + std::string(t));
    std::string key(trim_ws(t.substr(0, eq)));
    std::string value(trim_ws(t.substr(eq + 1)));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.rfind("--", 0) != 0) key = "--" + key;
    if (given(rest, key)) continue;
    if (value == "true") {
      extra.push_back(key);
    } else if (value != "false") {
      extra.push_back(key);
      extra.push_back(value);
    }
  }
  rest.insert(rest.begin() + 1, extra.begin(), extra.end());
  return rest;
}

void add_ga_flags(CLI::App* cmd, GaConfig& ga) {
  cmd->add_option("--population", ga.population, "GA population size")->capture_default_str();
  cmd->add_option("--generations", ga.generations, "GA generations")->capture_default_str();
  cmd->add_option("--tournament", ga.tournament, "Tournament size")->capture_default_str();
  cmd->add_option("--crossover-prob", ga.crossover_prob, "Crossover probability")->capture_default_str();
  cmd->add_option("--blend-alpha", ga.blend_alpha, "Blend crossover alpha")->capture_default_str();
  cmd->add_option("--mutation-prob", ga.mutation_prob, "Per-gene mutation probability")->capture_default_str();
  cmd->add_option("--mutation-mu", ga.mutation_mu, "Mutation mean")->capture_default_str();
  cmd->add_option("--mutation-sigma", ga.mutation_sigma, "Mutation standard deviation")->capture_default_str();
  cmd->add_flag("!--no-elitism", ga.elitism, "Disable elitism");
}

GridGeometry parse_grid(const std::string& text, double pitch) {
  const auto x = text.find('x');
  if (x == std::string::npos) throw UsageError("--grid expects WIDTHxHEIGHT, got '" + text + "'");
  GridGeometry g;
  try {
    std::size_t used = 0;
    g.width = std::stoi(text.substr(0, x), &used);
    if (used != x) throw std::invalid_argument("w");
    g.height = std::stoi(text.substr(x + 1), &used);
    if (used != text.size() - x - 1) throw std::invalid_argument("h");
  } catch (const std::logic_error&) {
    throw UsageError("--grid expects WIDTHxHEIGHT, got '" + text + "'");
  }
  g.pitch_mm = pitch;
  if (g.width <= 0 || g.height <= 0) throw UsageError("--grid dimensions must be positive, got '" + text + "'");
  if (!(pitch > 0.0)) throw UsageError("--pitch must be positive");
  return g;
}

PlateSpec parse_plate(const std::string& text) {
  try {
    return PlateSpec::parse(text);
  } catch (const InvalidParameter& e) {
    throw UsageError(std::string("--plate: ") + e.what());
  }
}

GateParams parse_gate_flag(const std::string& text, const char* flag) {
  try {
    return parse_gate_params(text);
  } catch (const FormatError& e) {
    throw UsageError(std::string(flag) + ": " + e.what());
  }
}

std::vector<double> parse_double_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  for (std::string_view f : split_fields(text)) {
    try {
      out.push_back(parse_double(f, flag));
    } catch (const FormatError& e) {
      throw UsageError(e.what());
    }
  }
  return out;
}

std::vector<Engine> parse_engine_list(const std::string& text) {
  std::vector<Engine> out;
  for (std::string_view f : split_fields(text)) out.push_back(engine_from_name(f));
  return out;
}

std::shared_ptr<const MlpModel> load_model_flag(const std::string& path) {
  if (path.empty()) return nullptr;
  return std::make_shared<const MlpModel>(load_model(path));
}

void warn_clamped(std::ostream& err, int clamped) {
  if (clamped > 0) err << "warning: " << clamped << " intensities outside [0, 1] were clamped\n";
}

// --- simulate ----------------------------------------------------------------

struct SimulateArgs {
  Common common;
  std::string plate;
  std::string gate;
  std::string grid = "73x73";
  double pitch = 0.1;
  double delta = 0.0;
  bool per_pixel = false;
  bool shared_noise = false;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  if (a.plate.empty() == a.gate.empty()) throw UsageError("simulate needs exactly one of --plate or --gate");
  if (a.common.out.empty()) throw UsageError("simulate needs --out");
  if (!(a.delta >= 0.0)) throw UsageError("--delta must be non-negative");
  NoiseModel noise;
  noise.delta_deg = a.delta;
  noise.shared_draw = a.shared_noise;
  Rng rng = Rng::substream(a.common.seed, "simulate");

  if (!a.gate.empty()) {
    const GateParams p = parse_gate_flag(a.gate, "--gate");
    const MeasurementSet m = six_intensities_noisy(p, noise, derive_bench_settings(), rng);
    write_measurement_file(m, a.common.out);
    out << "measurement: " << format_measurement(m) << '\n' << "written: " << a.common.out << '\n';
    return kOk;
  }

  const PlateSpec spec = parse_plate(a.plate);
  const GridGeometry geom = parse_grid(a.grid, a.pitch);
  SimulationOptions opts;
  opts.noise = noise;
  opts.per_pixel_noise = a.per_pixel;
  FrameSet frames = simulate_frames(spec, geom, opts, rng);
  frames.seed = a.common.seed;
  write_frameset(frames, a.common.out);
  out << "plate: " << frames.description << '\n'
      << "grid: " << geom.width << 'x' << geom.height << " pitch_mm " << format_double(geom.pitch_mm) << '\n'
      << "delta_deg: " << format_double(a.delta) << '\n'
      << "seed: " << a.common.seed << '\n'
      << "written: " << a.common.out << '\n';
  (void)err;
  return kOk;
}

// --- reconstruct -------------------------------------------------------------

struct ReconstructArgs {
  Common common;
  std::string input;
  std::string engine = "ga";
  std::string model;
  GaConfig ga;
  int ga_repeats = 1;
  BaselineConfig baseline;
  ContinuityConfig continuity;
  bool naive = false;
  std::string truth_gate;
  std::string truth_plate;
};

ReconstructionResult reconstruct_single(Engine e, const MeasurementSet& m, const ReconstructArgs& a,
                                        const MlpModel* model, Rng& rng, std::ostream& err) {
  switch (e) {
    case Engine::analytic: {
      const auto t0 = std::chrono::steady_clock::now();
      ReconstructionResult r;
      try {
        r.params = invert_six(m);
      } catch (const DegenerateGate& d) {
        err << "warning: " << d.what() << "; reporting the best candidate\n";
        r.params = d.best();
        r.converged = false;
      }
      r.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      r.raw = r.params;
      r.cost = mse_cost(Individual::from(r.params), m);
      r.engine = "analytic";
      return r;
    }
    case Engine::baseline:
      return minimize_likelihood(m, a.baseline, rng);
    case Engine::ga: {
      ReconstructionResult best;
      double total = 0.0;
      for (int rep = 0; rep < a.ga_repeats; ++rep) {
        ReconstructionResult r = run_ga(m, a.ga, rng);
        total += r.elapsed_s;
        if (rep == 0 || r.cost < best.cost) best = r;
      }
      best.elapsed_s = total;
      return best;
    }
    case Engine::nn: {
      ReconstructionResult r = nn_reconstruct(*model, m);
      r.cost = mse_cost(Individual::from(r.params), m);
      return r;
    }
  }
  throw InternalError("unhandled engine");
}

int cmd_reconstruct(const ReconstructArgs& a, std::ostream& out, std::ostream& err) {
  const Engine engine = engine_from_name(a.engine);
  if (engine == Engine::nn && a.model.empty()) throw UsageError("the nn engine needs --model");
  if (a.ga_repeats < 1) throw UsageError("--ga-repeats must be positive");
  if (!a.truth_gate.empty() && !a.truth_plate.empty()) throw UsageError("give at most one of --truth-gate and --truth-plate");
  a.ga.validate();
  a.continuity.validate();
  const std::optional<GateParams> truth_gate =
      a.truth_gate.empty() ? std::nullopt : std::optional(parse_gate_flag(a.truth_gate, "--truth-gate"));
  const std::optional<PlateSpec> truth_plate =
      a.truth_plate.empty() ? std::nullopt : std::optional(parse_plate(a.truth_plate));
  const auto model = load_model_flag(a.model);
  Rng rng = Rng::substream(a.common.seed, "reconstruct");

  if (!fs::is_directory(a.input)) {
    if (truth_plate) throw UsageError("--truth-plate applies to framesets; use --truth-gate");
    int clamped = 0;
    const MeasurementSet m = read_measurement_file(a.input, &clamped);
    warn_clamped(err, clamped);
    const ReconstructionResult r = reconstruct_single(engine, m, a, model.get(), rng, err);
    if (!a.common.out.empty()) write_gate_params_file(r.params, a.common.out);
    out << "engine: " << r.engine << '\n'
        << "params: " << format_gate_params(r.params) << '\n'
        << "cost: " << format_double(r.cost) << '\n'
        << "elapsed_s: " << format_double(r.elapsed_s) << '\n';
    if (truth_gate) out << "fidelity: " << format_double(fidelity(r.params, *truth_gate)) << '\n';
    return kOk;
  }

  if (truth_gate) throw UsageError("--truth-gate applies to single measurements; use --truth-plate");
  int clamped = 0;
  const FrameSet frames = read_frameset(a.input, &clamped);
  warn_clamped(err, clamped);
  const auto t0 = std::chrono::steady_clock::now();
  ParamMap map(frames.geometry);
  switch (engine) {
    case Engine::ga: {
      ContinuityConfig cont = a.continuity;
      if (a.naive) {
        cont.radius = 0;
        cont.generations_origin = a.ga.generations;
      }
      map = reconstruct_map_ga(frames, a.ga, cont, rng);
      break;
    }
    case Engine::nn:
      map = reconstruct_map_nn(frames, *model);
      break;
    case Engine::analytic:
    case Engine::baseline: {
      map.cost = Grid<double>(frames.geometry.width, frames.geometry.height);
      for (int r = 0; r < frames.geometry.height; ++r) {
        for (int c = 0; c < frames.geometry.width; ++c) {
          const ReconstructionResult res = reconstruct_single(engine, frames.pixel(r, c), a, nullptr, rng, err);
          map.params.at(r, c) = res.params;
          map.cost->at(r, c) = res.cost;
        }
      }
      gauge_fix(map.params);
      break;
    }
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (!map.cost) {
    map.cost = Grid<double>(frames.geometry.width, frames.geometry.height);
    for (int r = 0; r < frames.geometry.height; ++r) {
      for (int c = 0; c < frames.geometry.width; ++c) {
        map.cost->at(r, c) = mse_cost(Individual::from(map.params.at(r, c)), frames.pixel(r, c));
      }
    }
  }
  double cost_sum = 0.0;
  for (double v : map.cost->cells) cost_sum += v;

  std::optional<double> mean_fid;
  if (truth_plate) {
    const MapFidelity mf = map_fidelity(map, truth_map(*truth_plate, frames.geometry));
    map.fidelity = mf.per_pixel;
    mean_fid = mf.mean;
  }
  if (!a.common.out.empty()) write_param_map(map, a.common.out);
  out << "engine: " << engine_name(engine) << '\n'
      << "grid: " << frames.geometry.width << 'x' << frames.geometry.height << '\n'
      << "mean_cost: " << format_double(cost_sum / static_cast<double>(map.cost->cells.size())) << '\n'
      << "elapsed_s: " << format_double(elapsed) << '\n';
  if (mean_fid) out << "mean_fidelity: " << format_double(*mean_fid) << '\n';
  return kOk;
}

// --- train -------------------------------------------------------------------

struct TrainArgs {
  Common common;
  bool desk = false;
  std::optional<int> epochs;
  std::optional<int> train_batches;
  std::optional<int> validation_batches;
  std::optional<int> batch_size;
  std::optional<double> learning_rate;
  std::optional<double> dropout;
  std::optional<int> patience;
  std::string measure = "haar";
  std::string log;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  if (a.common.out.empty()) throw UsageError("train needs --out MODEL");
  TrainConfig cfg = a.desk ? TrainConfig::desk() : TrainConfig::full();
  if (a.epochs) cfg.epochs = *a.epochs;
  if (a.train_batches) cfg.train_batches = *a.train_batches;
  if (a.validation_batches) cfg.validation_batches = *a.validation_batches;
  if (a.batch_size) cfg.batch_size = *a.batch_size;
  if (a.learning_rate) cfg.learning_rate = *a.learning_rate;
  if (a.dropout) cfg.dropout_rate = *a.dropout;
  if (a.patience) cfg.plateau_patience = *a.patience;
  if (a.measure == "haar") {
    cfg.measure = GateMeasure::haar;
  } else if (a.measure == "ball") {
    cfg.measure = GateMeasure::ball;
  } else {
    throw UsageError("--measure must be haar or ball");
  }
  cfg.seed = a.common.seed;
  cfg.validate();

  const fs::path model_path = a.common.out;
  fs::path log_path = a.log;
  if (log_path.empty()) log_path = fs::path(model_path).replace_extension(".log.csv");

  Rng rng = Rng::substream(a.common.seed, "nn-train");
  try {
    const TrainingResult result = train(cfg, rng, [&](const EpochLog& e) {
      if (!a.quiet) {
        out << "epoch " << e.epoch << " train_mse " << format_double(e.train_mse) << " val_mse "
            << format_double(e.val_mse) << " lr " << format_double(e.learning_rate) << std::endl;
      }
    });
    save_model(result.model, model_path);
    write_training_log(result.log, cfg, log_path);
  } catch (const TrainingFailure& f) {
    write_training_log(f.log(), cfg, log_path);
    err << "error: training diverged: " << f.what() << '\n';
    return kNumerical;
  }
  out << "model: " << model_path.string() << '\n' << "log: " << log_path.string() << '\n';
  return kOk;
}

// --- benchmark ---------------------------------------------------------------

struct BenchmarkArgs {
  Common common;
  int gates = 1000;
  std::string deltas = "0,1,2,5";
  std::string engines = "baseline,ga,nn";
  std::string model;
  GaConfig ga;
  int ga_repeats = 1;
  int restarts = 1;
  int max_evals = 2000;
  int threads = 0;
  bool svg = false;
  bool shared_noise = false;
  std::string measure = "haar";
};

int cmd_benchmark(const BenchmarkArgs& a, std::ostream& out, std::ostream& err) {
  if (a.common.out.empty()) throw UsageError("benchmark needs --out DIR");
  BenchmarkPlan plan;
  plan.gates = a.gates;
  plan.deltas_deg = parse_double_list(a.deltas, "--deltas");
  plan.engines = parse_engine_list(a.engines);
  plan.ga = a.ga;
  plan.ga_repeats = a.ga_repeats;
  plan.baseline.restarts = a.restarts;
  plan.baseline.max_evals = a.max_evals;
  plan.threads = a.threads;
  plan.shared_noise = a.shared_noise;
  plan.seed = a.common.seed;
  if (a.measure == "ball") {
    plan.measure = GateMeasure::ball;
  } else if (a.measure != "haar") {
    throw UsageError("--measure must be haar or ball");
  }
  const bool needs_model = std::find(plan.engines.begin(), plan.engines.end(), Engine::nn) != plan.engines.end();
  if (needs_model && a.model.empty()) throw UsageError("the nn engine needs --model");
  plan.model = load_model_flag(a.model);
  plan.validate();

  const BenchmarkReport report = run_benchmark(plan);
  const fs::path dir = a.common.out;
  write_text_file(dir / "report.csv", report.report_csv());
  write_text_file(dir / "histogram.csv", report.histogram_csv());
  write_text_file(dir / "fidelities.csv", report.fidelities_csv());
  if (a.svg) {
    for (double d : plan.deltas_deg) {
      write_text_file(dir / ("histogram_delta" + format_double(d) + ".svg"), report.histogram_svg(d));
    }
  }
  for (const EngineStats& s : report.rows) {
    if (s.failures > 0) {
      err << "warning: " << engine_name(s.engine) << " at " << format_double(s.delta_deg) << " deg failed on "
          << s.failures << " gates (counted as F = 0)\n";
    }
  }
  out << report.report_csv();
  return kOk;
}

// --- fidelity ----------------------------------------------------------------

struct FidelityArgs {
  Common common;
  std::string a;
  std::string b;
};

int cmd_fidelity(const FidelityArgs& a, std::ostream& out, std::ostream&) {
  const ParamMap ma = read_param_map(a.a);
  const ParamMap mb = read_param_map(a.b);
  const MapFidelity mf = map_fidelity(ma, mb);
  if (!a.common.out.empty()) {
    std::string csv = "x,y,fidelity\n";
    for (int r = 0; r < mf.per_pixel.height; ++r) {
      for (int c = 0; c < mf.per_pixel.width; ++c) {
        csv += std::to_string(c) + ',' + std::to_string(r) + ',' + format_double(mf.per_pixel.at(r, c)) + '\n';
      }
    }
    write_text_file(a.common.out, csv);
  }
  out << "pixels: " << mf.per_pixel.cells.size() << '\n' << "mean_fidelity: " << format_double(mf.mean) << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Polarization gate tomography: simulation, reconstruction, training and benchmarks", "qpt"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Simulate a measurement set or a six-frame image set");
  add_common(simulate, sim.common);
  simulate->add_option("--plate", sim.plate, "Plate stack, e.g. gy:pi/4*gx:pi*w:pi/2");
  simulate->add_option("--gate", sim.gate, "Single gate theta,nx,ny,nz");
  simulate->add_option("--grid", sim.grid, "Grid WIDTHxHEIGHT")->capture_default_str();
  simulate->add_option("--pitch", sim.pitch, "Pixel pitch in mm")->capture_default_str();
  simulate->add_option("--delta", sim.delta, "Waveplate angle noise, degrees")->capture_default_str();
  simulate->add_flag("--per-pixel-noise", sim.per_pixel, "Redraw plate noise for every pixel");
  simulate->add_flag("--shared-noise", sim.shared_noise, "One jitter draw for all six channels");

  ReconstructArgs rec;
  CLI::App* reconstruct = app.add_subcommand("reconstruct", "Reconstruct gate parameters from intensities");
  add_common(reconstruct, rec.common);
  reconstruct->add_option("input", rec.input, "Measurement file or frameset directory")->required();
  reconstruct->add_option("--engine", rec.engine, "analytic, baseline, ga or nn")->capture_default_str();
  reconstruct->add_option("--model", rec.model, "Trained model file (nn engine)");
  add_ga_flags(reconstruct, rec.ga);
  reconstruct->add_option("--ga-repeats", rec.ga_repeats, "Independent GA runs; the best is kept")->capture_default_str();
  reconstruct->add_option("--restarts", rec.baseline.restarts, "Baseline restarts")->capture_default_str();
  reconstruct->add_option("--max-evals", rec.baseline.max_evals, "Baseline evaluation budget")->capture_default_str();
  reconstruct->add_option("--radius", rec.continuity.radius, "Seeding neighbourhood radius (0: independent pixels)")
      ->capture_default_str();
  reconstruct->add_option("--epsilon", rec.continuity.epsilon, "Seed perturbation half-width")->capture_default_str();
  reconstruct->add_option("--origin-generations", rec.continuity.generations_origin, "Generations at unseeded pixels")
      ->capture_default_str();
  reconstruct->add_option("--seeded-generations", rec.continuity.generations, "Generations at seeded pixels")
      ->capture_default_str();
  reconstruct->add_flag("--naive", rec.naive, "Run every pixel independently for --generations");
  reconstruct->add_option("--truth-gate", rec.truth_gate, "True gate theta,nx,ny,nz for a fidelity report");
  reconstruct->add_option("--truth-plate", rec.truth_plate, "True plate stack for a fidelity map");

  TrainArgs tr;
  CLI::App* trainc = app.add_subcommand("train", "Train the reconstruction network");
  add_common(trainc, tr.common);
  trainc->add_flag("--desk", tr.desk, "Short schedule (10 epochs of 1024 batches)");
  trainc->add_option("--epochs", tr.epochs, "Epochs");
  trainc->add_option("--train-batches", tr.train_batches, "Training batches per epoch");
  trainc->add_option("--validation-batches", tr.validation_batches, "Validation batches");
  trainc->add_option("--batch-size", tr.batch_size, "Batch size");
  trainc->add_option("--lr", tr.learning_rate, "Initial learning rate");
  trainc->add_option("--dropout", tr.dropout, "Gaussian dropout rate");
  trainc->add_option("--patience", tr.patience, "Plateau patience, epochs");
  trainc->add_option("--measure", tr.measure, "Training gate distribution: haar or ball")->capture_default_str();
  trainc->add_option("--log", tr.log, "Per-epoch CSV log (default: next to the model)");
  trainc->add_flag("--quiet", tr.quiet, "No per-epoch progress");

  BenchmarkArgs bm;
  CLI::App* bench = app.add_subcommand("benchmark", "Sweep engines over noise levels on random gates");
  add_common(bench, bm.common);
  bench->add_option("--gates", bm.gates, "Gates per noise level")->capture_default_str();
  bench->add_option("--deltas", bm.deltas, "Comma-separated noise levels, degrees")->capture_default_str();
  bench->add_option("--engines", bm.engines, "Comma-separated engines")->capture_default_str();
  bench->add_option("--model", bm.model, "Trained model file (nn engine)");
  add_ga_flags(bench, bm.ga);
  bench->add_option("--ga-repeats", bm.ga_repeats, "Independent GA runs per gate")->capture_default_str();
  bench->add_option("--restarts", bm.restarts, "Baseline restarts")->capture_default_str();
  bench->add_option("--max-evals", bm.max_evals, "Baseline evaluation budget")->capture_default_str();
  bench->add_option("--threads", bm.threads, "Worker threads (0: all)")->capture_default_str();
  bench->add_option("--measure", bm.measure, "Gate distribution: haar or ball")->capture_default_str();
  bench->add_flag("--svg", bm.svg, "Also write SVG histograms");
  bench->add_flag("--shared-noise", bm.shared_noise, "One jitter draw for all six channels");

  FidelityArgs fa;
  CLI::App* fid = app.add_subcommand("fidelity", "Compare two parameter maps pixel by pixel");
  add_common(fid, fa.common);
  fid->add_option("a", fa.a, "First parameter map CSV")->required();
  fid->add_option("b", fa.b, "Second parameter map CSV")->required();

  std::vector<std::string> expanded;
  try {
    expanded = expand_config(args);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim, out, err);
    if (reconstruct->parsed()) return cmd_reconstruct(rec, out, err);
    if (trainc->parsed()) return cmd_train(tr, out, err);
    if (bench->parsed()) return cmd_benchmark(bm, out, err);
    if (fid->parsed()) return cmd_fidelity(fa, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kUsage;
}

}  // namespace qpt::cli
