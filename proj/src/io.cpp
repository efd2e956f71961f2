#include "qpt/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace qpt {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw InternalError("cannot format number");
  return std::string(buf, ptr);
}

std::string_view trim_ws(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view s, std::string_view what) {
  s = trim_ws(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw FormatError("invalid number '" + std::string(s) + "' in " + std::string(what));
  }
  return v;
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto at = line.find(sep, start);
    out.push_back(trim_ws(line.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start)));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return out;
}

std::string format_measurement(const MeasurementSet& m) {
  std::string s;
  for (std::size_t i = 0; i < 6; ++i) {
    if (i) s += ',';
    s += format_double(m.values[i]);
  }
  return s;
}

MeasurementSet parse_measurement(std::string_view line) {
  const auto f = split_fields(line);
  if (f.size() != 6) {
    throw FormatError("measurement line needs 6 values (LL,HH,LH,LD,HL,HD), got " + std::to_string(f.size()));
  }
  MeasurementSet m;
  for (std::size_t i = 0; i < 6; ++i) m.values[i] = parse_double(f[i], "measurement line");
  return m;
}

std::string format_gate_params(const GateParams& p) {
  return format_double(p.theta) + ',' + format_double(p.n[0]) + ',' + format_double(p.n[1]) + ',' +
         format_double(p.n[2]);
}

GateParams parse_gate_params(std::string_view line) {
  const auto f = split_fields(line);
  if (f.size() != 4) throw FormatError("gate line needs 4 values (theta,nx,ny,nz), got " + std::to_string(f.size()));
  GateParams p;
  p.theta = parse_double(f[0], "gate line");
  for (std::size_t i = 0; i < 3; ++i) p.n[i] = parse_double(f[i + 1], "gate line");
  try {
    validate(p);
  } catch (const InvalidParameter& e) {
    throw FormatError(std::string("gate line: ") + e.what());
  }
  return p;
}

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

bool skippable(std::string_view line) {
  line = trim_ws(line);
  return line.empty() || line.front() == '#';
}

}  // namespace

std::string read_single_line(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (!skippable(line)) return line;
  }
  throw FormatError("'" + path.string() + "' contains no data line");
}

void write_text_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

MeasurementSet read_measurement_file(const fs::path& path, int* clamped) {
  MeasurementSet m = parse_measurement(read_single_line(path));
  const int n = clamp_intensities(m);
  if (clamped) *clamped = n;
  return m;
}

void write_measurement_file(const MeasurementSet& m, const fs::path& path) {
  write_text_file(path, format_measurement(m) + '\n');
}

GateParams read_gate_params_file(const fs::path& path) { return parse_gate_params(read_single_line(path)); }

void write_gate_params_file(const GateParams& p, const fs::path& path) {
  write_text_file(path, format_gate_params(p) + '\n');
}

void write_frameset(const FrameSet& frames, const fs::path& dir) {
  frames.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw IoError("cannot create directory '" + dir.string() + "'");

  std::string labels;
  for (Channel c : kChannels) {
    if (!labels.empty()) labels += ',';
    labels += channel_name(c);
  }
  std::ostringstream manifest;
  manifest << "width=" << frames.geometry.width << '\n'
           << "height=" << frames.geometry.height << '\n'
           << "pitch_mm=" << format_double(frames.geometry.pitch_mm) << '\n'
           << "labels=" << labels << '\n'
           << "delta_deg=" << format_double(frames.delta_deg) << '\n'
           << "seed=" << frames.seed << '\n'
           << "description=" << frames.description << '\n';
  write_text_file(dir / "manifest.txt", manifest.str());

  for (Channel c : kChannels) {
    const Grid<double>& g = frames.frame(c);
    std::string csv;
    csv.reserve(static_cast<std::size_t>(g.width) * g.height * 20);
    for (int r = 0; r < g.height; ++r) {
      for (int col = 0; col < g.width; ++col) {
        if (col) csv += ',';
        csv += format_double(g.at(r, col));
      }
      csv += '\n';
    }
    write_text_file(dir / (std::string(channel_name(c)) + ".csv"), csv);
  }
}

FrameSet read_frameset(const fs::path& dir, int* clamped) {
  if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a frameset directory");
  std::map<std::string, std::string, std::less<>> kv;
  {
    std::ifstream in = open_in(dir / "manifest.txt");
    std::string line;
    while (std::getline(in, line)) {
      if (skippable(line)) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw FormatError("manifest line without '=': " + line);
      kv[std::string(trim_ws(std::string_view(line).substr(0, eq)))] =
          std::string(trim_ws(std::string_view(line).substr(eq + 1)));
    }
  }
  auto need = [&](std::string_view key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("manifest is missing '" + std::string(key) + "'");
    return it->second;
  };
  auto as_int = [&](std::string_view key) {
    const std::string& s = need(key);
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw FormatError("manifest '" + std::string(key) + "' is not an integer");
    return v;
  };

  FrameSet frames;
  frames.geometry.width = as_int("width");
  frames.geometry.height = as_int("height");
  frames.geometry.pitch_mm = kv.count("pitch_mm") ? parse_double(need("pitch_mm"), "manifest pitch_mm") : 0.1;
  frames.delta_deg = kv.count("delta_deg") ? parse_double(need("delta_deg"), "manifest delta_deg") : 0.0;
  if (kv.count("seed")) {
    const std::string& s = need("seed");
    std::from_chars(s.data(), s.data() + s.size(), frames.seed);
  }
  if (kv.count("description")) frames.description = need("description");
  if (kv.count("labels")) {
    const auto labels = split_fields(need("labels"));
    bool ok = labels.size() == 6;
    for (std::size_t i = 0; ok && i < 6; ++i) ok = labels[i] == channel_name(kChannels[i]);
    if (!ok) throw FormatError("manifest labels must be LL,HH,LH,LD,HL,HD");
  }
  try {
    frames.geometry.validate();
  } catch (const GeometryError& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }

  int n_clamped = 0;
  for (Channel c : kChannels) {
    const fs::path file = dir / (std::string(channel_name(c)) + ".csv");
    std::ifstream in = open_in(file);
    Grid<double>& g = frames.frame(c);
    g = Grid<double>(frames.geometry.width, frames.geometry.height);
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
      if (skippable(line)) continue;
      if (row >= g.height) throw FormatError(file.string() + ": more rows than the manifest height");
      const auto f = split_fields(line);
      if (static_cast<int>(f.size()) != g.width) {
        throw FormatError(file.string() + ": row " + std::to_string(row) + " has " + std::to_string(f.size()) +
                          " values, expected " + std::to_string(g.width));
      }
      for (int col = 0; col < g.width; ++col) {
        double v = parse_double(f[static_cast<std::size_t>(col)], file.string());
        if (v < 0.0 || v > 1.0) {
          v = std::clamp(v, 0.0, 1.0);
          ++n_clamped;
        }
        g.at(row, col) = v;
      }
      ++row;
    }
    if (row != g.height) throw FormatError(file.string() + ": fewer rows than the manifest height");
  }
  if (clamped) *clamped = n_clamped;
  return frames;
}

void write_param_map(const ParamMap& map, const fs::path& path) {
  const Grid<GateParams>& p = map.params;
  std::string csv = "x,y,theta,nx,ny,nz";
  if (map.cost) csv += ",cost";
  if (map.fidelity) csv += ",fidelity";
  csv += '\n';
  for (int r = 0; r < p.height; ++r) {
    for (int c = 0; c < p.width; ++c) {
      csv += std::to_string(c) + ',' + std::to_string(r) + ',' + format_gate_params(p.at(r, c));
      if (map.cost) csv += ',' + format_double(map.cost->at(r, c));
      if (map.fidelity) csv += ',' + format_double(map.fidelity->at(r, c));
      csv += '\n';
    }
  }
  write_text_file(path, csv);
}

ParamMap read_param_map(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  std::vector<std::string_view> header;
  std::string header_line;
  while (std::getline(in, line)) {
    if (skippable(line)) continue;
    header_line = line;
    header = split_fields(header_line);
    break;
  }
  const std::vector<std::string_view> base{"x", "y", "theta", "nx", "ny", "nz"};
  if (header.size() < 6 || !std::equal(base.begin(), base.end(), header.begin())) {
    throw FormatError(path.string() + ": header must start with x,y,theta,nx,ny,nz");
  }
  int cost_col = -1;
  int fid_col = -1;
  for (std::size_t i = 6; i < header.size(); ++i) {
    if (header[i] == "cost") {
      cost_col = static_cast<int>(i);
    } else if (header[i] == "fidelity") {
      fid_col = static_cast<int>(i);
    } else {
      throw FormatError(path.string() + ": unknown column '" + std::string(header[i]) + "'");
    }
  }

  struct Row {
    int x, y;
    GateParams p;
    double cost, fid;
  };
  std::vector<Row> rows;
  int width = 0;
  int height = 0;
  while (std::getline(in, line)) {
    if (skippable(line)) continue;
    const auto f = split_fields(line);
    if (f.size() != header.size()) throw FormatError(path.string() + ": row with wrong field count: " + line);
    Row row{};
    const double x = parse_double(f[0], "parameter map x");
    const double y = parse_double(f[1], "parameter map y");
    if (x < 0 || y < 0 || x != std::floor(x) || y != std::floor(y) || x > 1e6 || y > 1e6) {
      throw FormatError(path.string() + ": pixel indices must be non-negative integers");
    }
    row.x = static_cast<int>(x);
    row.y = static_cast<int>(y);
    std::string gate;
    for (std::size_t i = 2; i < 6; ++i) {
      if (i > 2) gate += ',';
      gate += f[i];
    }
    row.p = parse_gate_params(gate);
    if (cost_col >= 0) row.cost = parse_double(f[static_cast<std::size_t>(cost_col)], "parameter map cost");
    if (fid_col >= 0) row.fid = parse_double(f[static_cast<std::size_t>(fid_col)], "parameter map fidelity");
    width = std::max(width, row.x + 1);
    height = std::max(height, row.y + 1);
    rows.push_back(row);
  }
  if (rows.empty()) throw FormatError(path.string() + ": parameter map has no pixels");
  if (rows.size() != static_cast<std::size_t>(width) * height) {
    throw FormatError(path.string() + ": parameter map does not cover a full rectangular grid");
  }

  GridGeometry geom;
  geom.width = width;
  geom.height = height;
  ParamMap map(geom);
  if (cost_col >= 0) map.cost = Grid<double>(width, height);
  if (fid_col >= 0) map.fidelity = Grid<double>(width, height);
  std::vector<char> seen(rows.size(), 0);
  for (const Row& row : rows) {
    const std::size_t idx = static_cast<std::size_t>(row.y) * width + row.x;
    if (seen[idx]) throw FormatError(path.string() + ": duplicate pixel (" + std::to_string(row.x) + "," + std::to_string(row.y) + ")");
    seen[idx] = 1;
    map.params.at(row.y, row.x) = row.p;
    if (map.cost) map.cost->at(row.y, row.x) = row.cost;
    if (map.fidelity) map.fidelity->at(row.y, row.x) = row.fid;
  }
  return map;
}

}  // namespace qpt
