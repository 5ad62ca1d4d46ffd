#pragma once

// Plain-text and binary file formats.
//
// Observation table (comma-separated, header required):
//   kind,lo1,hi1,lo2,hi2,value
//   rect,0,10,0,10,1.25
//   point,3.5,3.5,7,7,0.5        (a point repeats its coordinates)
// Vector file: header "value", one number per line.
// Chain store: a directory holding chains.json (metadata) and
//   chain_<c>.bin, little-endian float64 in column-major order
//   (all draws of parameter 0, then parameter 1, ...).
// Raster: ESRI-style ASCII grid header, then rows from the top (largest
//   second coordinate) down, space-separated.
// Every number is written with 17 significant digits.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "splinecos/basis.hpp"
#include "splinecos/predict.hpp"
#include "splinecos/sampler.hpp"

namespace splinecos {

std::string format_number(double v);

struct ObservationTable {
  std::vector<SupportGeometry> supports;
  std::vector<double> values;
};

void write_observations(const std::filesystem::path& path, std::span<const SupportGeometry> supports,
                        std::span<const double> values);
ObservationTable read_observations(const std::filesystem::path& path);

void write_vector(const std::filesystem::path& path, const Eigen::VectorXd& v);
Eigen::VectorXd read_vector(const std::filesystem::path& path);

struct ChainMetadata {
  std::vector<std::string> names;
  std::size_t draws_per_chain = 0;
  std::size_t n_chains = 0;
  SamplerConfig sampler;
  std::string model_hash;
  std::string version;
};

void write_chain_store(const std::filesystem::path& dir, const PosteriorSamples& samples,
                       const std::string& model_hash);
/// Reads the draws back. The returned layout carries names only; call
/// ParameterLayout::from_spec to recover offsets.
PosteriorSamples read_chain_store(const std::filesystem::path& dir, ChainMetadata* metadata = nullptr);

/// Regular grid of rectangles: cell (r, c) covers
/// [x0 + c dx, x0 + (c+1) dx] x [y0 + r dy, y0 + (r+1) dy]; targets are
/// ordered with r (from the bottom) outer and c inner.
struct GridSpec {
  double x0 = 0.0, y0 = 0.0, dx = 1.0, dy = 1.0;
  int ncols = 1, nrows = 1;

  std::vector<SupportGeometry> cells() const;
  /// Parses "x0,y0,dx,dy,ncols,nrows".
  static GridSpec parse(const std::string& text);
};

void write_raster(const std::filesystem::path& path, const GridSpec& grid, const Eigen::VectorXd& values);
/// Returns the values in target order; the header must match `grid`.
Eigen::VectorXd read_raster(const std::filesystem::path& path, GridSpec* grid = nullptr);

void write_prediction_table(const std::filesystem::path& path, std::span<const SupportGeometry> targets,
                            const PredictionTable& table);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace splinecos
