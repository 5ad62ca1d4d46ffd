#pragma once

// JSON run configuration for the command-line tool.
//
// {
//   "model": {
//     "domain": [lo1, hi1, lo2, hi2],          // [lo, hi, 0, 1] with n_basis [q, 1] for a line
//     "residual":  {"n_basis": [20, 20], "order": 3, "kappa": "sample", "kappa_prior": [0.01, 0.01]},
//     "predictor": {"n_basis": [20, 20], "order": 3, "kappa": "sample"},   // default predictor field
//     "coefficient_prior_variance": 100, "intercept_prior_variance": 100,
//     "response_variance_prior": [0.01, 0.01], "predictor_variance_prior": [0.01, 0.01],
//     "center_fields": true
//   },
//   "data": {
//     "responses":  [{"id": "y", "path": "y.csv", "family": "gaussian", "reliable": true,
//                     "variance": "constant", "naive": false}],
//     "predictors": [{"id": "x", "path": "x.csv", "variance": "constant", "field": {...}}]
//   },
//   "sampler": {"n_iter": 10000, "burn_in": 2000, "thin": 5, "chains": 1, "seed": 1},
//   "output": {"directory": "fit"}
// }
//
// "kappa" is "sample", "unit-variance" or a positive number (fixed).
// Relative paths are resolved against the directory of the config file.

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "splinecos/model.hpp"
#include "splinecos/sampler.hpp"
#include "splinecos/simulate.hpp"

namespace splinecos {

struct FieldSpec {
  std::array<int, 2> n_basis{20, 20};
  int order = 3;
  KappaTreatment treatment = KappaTreatment::Sample;
  double kappa = 1.0;
  GammaPrior prior;
};

struct ResponseFile {
  std::string id;
  std::filesystem::path path;
  Family family = Family::Gaussian;
  bool reliable = false;
  VarianceFunction variance = VarianceFunction::Constant;
  /// Fit rectangles through their centroids.
  bool naive = false;
};

struct PredictorFile {
  std::string id;
  std::filesystem::path path;
  VarianceFunction variance = VarianceFunction::Constant;
  FieldSpec field;
};

struct RunConfig {
  std::filesystem::path source;
  std::array<double, 4> domain{0.0, 1.0, 0.0, 1.0};
  FieldSpec residual;
  double coefficient_prior_variance = 100.0;
  double intercept_prior_variance = 100.0;
  InverseGammaPrior response_variance_prior;
  InverseGammaPrior predictor_variance_prior;
  bool center_fields = true;
  std::vector<ResponseFile> responses;
  std::vector<PredictorFile> predictors;
  SamplerConfig sampler;
  std::filesystem::path output_dir;
  /// Canonical dump of the model and data sections.
  std::string canonical_model;
};

/// Parses and validates; errors name the file, line and JSON path.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& source);

TensorBasis field_basis(const std::array<double, 4>& domain, const FieldSpec& field);

struct LoadedModel {
  ModelSpec spec;
  /// Hash of the model/data sections and every data file's bytes.
  std::string hash;
};

/// Reads every data file (all must exist before anything is parsed) and
/// builds the model.
LoadedModel load_model(const RunConfig& config);

/// Scenario parameters for `simulate`; every key is optional.
struct SimulateConfig {
  ScenarioConfig scenario;
  FullBinaryConfig binary;
  std::array<int, 2> truth_cells{50, 50};
  SamplerConfig sampler;
};

SimulateConfig parse_simulate_config(const std::string& text, const std::filesystem::path& source,
                                     Scenario kind);

}  // namespace splinecos
