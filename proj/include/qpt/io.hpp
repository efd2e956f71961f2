#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "qpt/polarimetry.hpp"
#include "qpt/spatial.hpp"

namespace qpt {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
/// Throws FormatError.
double parse_double(std::string_view s, std::string_view what);
std::vector<std::string_view> split_fields(std::string_view line, char sep = ',');
std::string_view trim_ws(std::string_view s);

/// LL,HH,LH,LD,HL,HD
std::string format_measurement(const MeasurementSet& m);
MeasurementSet parse_measurement(std::string_view line);

/// theta,nx,ny,nz
std::string format_gate_params(const GateParams& p);
GateParams parse_gate_params(std::string_view line);

/// First non-blank, non-comment line of a text file.
std::string read_single_line(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

/// Out-of-range intensities are clamped into [0, 1]; the number of clamped
/// values is reported through `clamped`.
MeasurementSet read_measurement_file(const std::filesystem::path& path, int* clamped = nullptr);
void write_measurement_file(const MeasurementSet& m, const std::filesystem::path& path);

GateParams read_gate_params_file(const std::filesystem::path& path);
void write_gate_params_file(const GateParams& p, const std::filesystem::path& path);

/// Directory holding manifest.txt and LL.csv ... HD.csv.
void write_frameset(const FrameSet& fs, const std::filesystem::path& dir);
FrameSet read_frameset(const std::filesystem::path& dir, int* clamped = nullptr);

/// CSV with x (column), y (row), theta, nx, ny, nz and optional cost / fidelity columns.
void write_param_map(const ParamMap& map, const std::filesystem::path& path);
ParamMap read_param_map(const std::filesystem::path& path);

}  // namespace qpt
