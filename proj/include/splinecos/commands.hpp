#pragma once

// The four batch commands behind the `splinecos` executable. Each writes its
// files under an output directory and a short report to `log`.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace splinecos {

struct SimulateArgs {
  std::string scenario;
  /// Optional JSON file overriding scenario parameters.
  std::optional<std::filesystem::path> config;
  std::uint64_t seed = 1;
  std::filesystem::path out = "data";
};

/// Writes the observation tables, the true coefficient vectors, the truth
/// on a regular grid (truth.csv and truth.asc) and a fit.json template.
void simulate_command(const SimulateArgs& args, std::ostream& log);

struct FitArgs {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::filesystem::path> out;
};

/// Runs the sampler and writes the chain store plus summary.csv.
void fit_command(const FitArgs& args, std::ostream& log);

struct PredictArgs {
  /// The run configuration the chains were fitted with.
  std::filesystem::path config;
  std::filesystem::path chains;
  /// Grid specs "x0,y0,dx,dy,ncols,nrows"; one raster set per grid.
  std::vector<std::string> grids;
  /// Observation-format file of explicit target supports.
  std::optional<std::filesystem::path> rects;
  std::string field = "eta";
  /// Raster (.asc) or vector file of true values for the single target set.
  std::optional<std::filesystem::path> truth;
  /// Response source id for success probabilities.
  std::optional<std::string> source;
  int threads = 1;
  std::filesystem::path out = "predict";
};

/// Checks the chain store against the model hash and writes, per target
/// set, a summary table and mean/sd/q025/q975 (and p_over) rasters.
void predict_command(const PredictArgs& args, std::ostream& log);

struct DiagnoseArgs {
  std::filesystem::path chains;
  std::optional<std::filesystem::path> out;
};

/// Writes diagnostics.csv (no rhat column for a single chain) and reports
/// whether every split R-hat is below 1.05. Returns that flag.
bool diagnose_command(const DiagnoseArgs& args, std::ostream& log);

}  // namespace splinecos
