#include "qpt/spatial.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace qpt {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view s, std::string_view context) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw InvalidParameter("cannot parse number '" + std::string(s) + "' in " + std::string(context));
  }
  return v;
}

/// "pi", "pi/4", "2pi/3", "0.5pi", "1.5708"
double parse_angle(std::string_view s) {
  s = trim(s);
  const auto pi_at = s.find("pi");
  if (pi_at == std::string_view::npos) return parse_number(s, "retardance");
  const std::string_view coef = s.substr(0, pi_at);
  std::string_view rest = s.substr(pi_at + 2);
  double value = kPi * (trim(coef).empty() ? 1.0 : parse_number(coef, "retardance"));
  rest = trim(rest);
  if (!rest.empty()) {
    if (rest.front() != '/') throw InvalidParameter("cannot parse retardance '" + std::string(s) + "'");
    const double den = parse_number(rest.substr(1), "retardance");
    if (den == 0.0) throw InvalidParameter("zero denominator in retardance");
    value /= den;
  }
  return value;
}

std::string format_angle(double rad) {
  std::ostringstream os;
  os.precision(17);
  const double coef = rad / kPi;
  if (coef == 1.0) {
    os << "pi";
  } else {
    os << coef << "pi";
  }
  return os.str();
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto at = s.find(sep, start);
    parts.push_back(s.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return parts;
}

}  // namespace

void PlateSpec::validate() const {
  if (elements.empty()) throw InvalidParameter("plate stack is empty");
  for (const PlateElement& e : elements) {
    if (const auto* g = std::get_if<GPlate>(&e); g && !(g->period_mm > 0.0)) {
      throw InvalidParameter("g-plate period must be positive");
    }
  }
}

std::string PlateSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = elements.size(); i-- > 0;) {
    if (i + 1 != elements.size()) os << '*';
    if (const auto* g = std::get_if<GPlate>(&elements[i])) {
      os << (g->axis == GPlate::Axis::x ? "gx:" : "gy:") << format_angle(g->retardance) << ':' << g->period_mm;
    } else {
      const auto& w = std::get<UniformPlate>(elements[i]);
      os << "w:" << format_angle(w.retardance) << ':' << w.axis_rad * 180.0 / kPi;
    }
  }
  return os.str();
}

PlateSpec PlateSpec::parse(std::string_view text) {
  PlateSpec spec;
  const auto factors = split(text, '*');
  // Operator-product notation: the rightmost factor acts first.
  for (auto it = factors.rbegin(); it != factors.rend(); ++it) {
    const auto fields = split(trim(*it), ':');
    const std::string_view kind = trim(fields[0]);
    if (fields.size() < 2 || fields.size() > 3) {
      throw InvalidParameter("plate element '" + std::string(*it) + "' must look like gx:<delta>[:<period mm>]");
    }
    const double delta = parse_angle(fields[1]);
    if (kind == "gx" || kind == "gy") {
      GPlate g;
      g.axis = kind == "gx" ? GPlate::Axis::x : GPlate::Axis::y;
      g.retardance = delta;
      if (fields.size() == 3) g.period_mm = parse_number(fields[2], "g-plate period");
      spec.elements.emplace_back(g);
    } else if (kind == "w") {
      UniformPlate w;
      w.retardance = delta;
      if (fields.size() == 3) w.axis_rad = parse_number(fields[2], "plate axis") * kPi / 180.0;
      spec.elements.emplace_back(w);
    } else {
      throw InvalidParameter("unknown plate kind '" + std::string(kind) + "' (expected gx, gy or w)");
    }
  }
  spec.validate();
  return spec;
}

void GridGeometry::validate() const {
  if (width <= 0 || height <= 0) throw GeometryError("grid dimensions must be positive");
  if (!(pitch_mm > 0.0)) throw GeometryError("pixel pitch must be positive");
}

MeasurementSet FrameSet::pixel(int row, int col) const {
  MeasurementSet m;
  for (Channel c : kChannels) m[c] = frame(c).at(row, col);
  return m;
}

void FrameSet::validate() const {
  geometry.validate();
  for (const Grid<double>& f : frames) {
    if (f.width != geometry.width || f.height != geometry.height ||
        f.cells.size() != geometry.pixels()) {
      throw GeometryError("frame dimensions do not match the frameset geometry");
    }
  }
}

void ContinuityConfig::validate() const {
  if (radius < 0) throw InvalidParameter("neighbour radius must be non-negative");
  if (!(epsilon >= 0.0)) throw InvalidParameter("seed perturbation must be non-negative");
  if (generations_origin < 0 || generations < 0) throw InvalidParameter("generation counts must be non-negative");
}

Unitary2 plate_unitary(const PlateSpec& spec, double x_mm, double y_mm) {
  Unitary2 u = Unitary2::identity();
  for (const PlateElement& e : spec.elements) {
    Unitary2 plate;
    if (const auto* g = std::get_if<GPlate>(&e)) {
      const double coord = g->axis == GPlate::Axis::x ? x_mm : y_mm;
      plate = waveplate(g->retardance, kPi * coord / g->period_mm);
    } else {
      const auto& w = std::get<UniformPlate>(e);
      plate = waveplate(w.retardance, w.axis_rad);
    }
    u = compose(plate, u);
  }
  return u;
}

ParamMap truth_map(const PlateSpec& spec, const GridGeometry& geom) {
  spec.validate();
  geom.validate();
  ParamMap map(geom);
  for (int r = 0; r < geom.height; ++r) {
    for (int c = 0; c < geom.width; ++c) {
      map.params.at(r, c) = params_from_matrix(plate_unitary(spec, geom.x_mm(c), geom.y_mm(r)));
    }
  }
  return map;
}

FrameSet simulate_frames(const PlateSpec& spec, const GridGeometry& geom, const SimulationOptions& opts, Rng& rng) {
  spec.validate();
  geom.validate();
  FrameSet fs;
  fs.geometry = geom;
  fs.delta_deg = opts.noise.delta_deg;
  fs.description = spec.describe();
  for (auto& f : fs.frames) f = Grid<double>(geom.width, geom.height);

  const BenchSettings nominal = derive_bench_settings();
  const BenchSettings shared = jitter_settings(nominal, opts.noise, rng);
  for (int r = 0; r < geom.height; ++r) {
    for (int c = 0; c < geom.width; ++c) {
      const Unitary2 u = plate_unitary(spec, geom.x_mm(c), geom.y_mm(r));
      const MeasurementSet m = opts.per_pixel_noise ? six_intensities_noisy(u, opts.noise, nominal, rng)
                                                    : pipeline_intensities(u, shared);
      for (Channel ch : kChannels) fs.frame(ch).at(r, c) = m[ch];
    }
  }
  return fs;
}

FrameSet downsample_frames(const FrameSet& raw, const GridGeometry& target) {
  raw.validate();
  target.validate();
  if (raw.geometry.width % target.width != 0 || raw.geometry.height % target.height != 0) {
    throw GeometryError("raw frames (" + std::to_string(raw.geometry.width) + "x" +
                        std::to_string(raw.geometry.height) + ") are not an integer multiple of the target (" +
                        std::to_string(target.width) + "x" + std::to_string(target.height) + ")");
  }
  const int fx = raw.geometry.width / target.width;
  const int fy = raw.geometry.height / target.height;
  FrameSet out = raw;
  out.geometry = target;
  for (std::size_t k = 0; k < 6; ++k) {
    Grid<double> binned(target.width, target.height);
    for (int r = 0; r < target.height; ++r) {
      for (int c = 0; c < target.width; ++c) {
        double sum = 0.0;
        for (int dr = 0; dr < fy; ++dr) {
          for (int dc = 0; dc < fx; ++dc) sum += raw.frames[k].at(r * fy + dr, c * fx + dc);
        }
        binned.at(r, c) = sum / (fx * fy);
      }
    }
    out.frames[k] = std::move(binned);
  }
  return out;
}

ParamMap reconstruct_map_ga(const FrameSet& frames, const GaConfig& cfg, const ContinuityConfig& cont, Rng& rng) {
  frames.validate();
  cfg.validate();
  cont.validate();
  const GridGeometry& geom = frames.geometry;
  ParamMap map(geom);
  map.cost = Grid<double>(geom.width, geom.height);

  GaConfig origin_cfg = cfg;
  origin_cfg.generations = cont.generations_origin;
  GaConfig seeded_cfg = cfg;
  seeded_cfg.generations = cont.generations;

  std::vector<const GateParams*> neighbours;
  std::vector<Individual> seed(static_cast<std::size_t>(cfg.population));
  for (int r = 0; r < geom.height; ++r) {
    for (int c = 0; c < geom.width; ++c) {
      neighbours.clear();
      for (int nr = std::max(0, r - cont.radius); nr <= r; ++nr) {
        for (int nc = std::max(0, c - cont.radius); nc <= std::min(geom.width - 1, c + cont.radius); ++nc) {
          if (nr == r && nc >= c) continue;  // not yet processed
          neighbours.push_back(&map.params.at(nr, nc));
        }
      }

      const MeasurementSet m = frames.pixel(r, c);
      ReconstructionResult res;
      if (neighbours.empty()) {
        res = run_ga(m, origin_cfg, rng);
      } else {
        for (Individual& ind : seed) {
          const GateParams& s = *neighbours[rng.index(neighbours.size())];
          ind = Individual::from(s);
          for (double& g : ind.genes) g += rng.uniform(-cont.epsilon, cont.epsilon);
          ind.genes[0] = std::clamp(ind.genes[0], 0.0, kPi);
          ind = repair(std::move(ind));
        }
        res = run_ga(m, seeded_cfg, rng, &seed);
      }
      map.params.at(r, c) = res.raw;
      map.cost->at(r, c) = res.cost;
    }
  }
  return map;
}

double param_distance(const GateParams& a, const GateParams& b) {
  const double dt = a.theta - b.theta;
  const double dx = a.n[0] - b.n[0];
  const double dy = a.n[1] - b.n[1];
  const double dz = a.n[2] - b.n[2];
  return std::sqrt(dt * dt + dx * dx + dy * dy + dz * dz);
}

int gauge_fix(Grid<GateParams>& params) {
  int flips = 0;
  for (int r = 0; r < params.height; ++r) {
    for (int c = 0; c < params.width; ++c) {
      if (r == 0 && c == 0) continue;
      const GateParams& ref = c > 0 ? params.at(r, c - 1) : params.at(r - 1, c);
      GateParams& p = params.at(r, c);
      const GateParams flipped = gauge_flip(p);
      if (param_distance(flipped, ref) < param_distance(p, ref)) {
        p = flipped;
        ++flips;
      }
    }
  }
  return flips;
}

ParamMap reconstruct_map_nn(const FrameSet& frames, const MlpModel& model) {
  frames.validate();
  model.check();
  const GridGeometry& geom = frames.geometry;
  std::vector<MeasurementSet> inputs;
  inputs.reserve(geom.pixels());
  for (int r = 0; r < geom.height; ++r) {
    for (int c = 0; c < geom.width; ++c) inputs.push_back(frames.pixel(r, c));
  }
  ParamMap map(geom);
  map.params.cells = forward_batch(model, inputs);
  gauge_fix(map.params);
  return map;
}

MapFidelity map_fidelity(const ParamMap& a, const ParamMap& b) {
  if (a.params.width != b.params.width || a.params.height != b.params.height) {
    throw GeometryError("parameter maps have different dimensions (" + std::to_string(a.params.width) + "x" +
                        std::to_string(a.params.height) + " vs " + std::to_string(b.params.width) + "x" +
                        std::to_string(b.params.height) + ")");
  }
  MapFidelity out;
  out.per_pixel = Grid<double>(a.params.width, a.params.height);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.params.cells.size(); ++i) {
    out.per_pixel.cells[i] = fidelity(a.params.cells[i], b.params.cells[i]);
    sum += out.per_pixel.cells[i];
  }
  out.mean = a.params.cells.empty() ? 0.0 : sum / static_cast<double>(a.params.cells.size());
  return out;
}

}  // namespace qpt
