#pragma once

// Synthetic scenarios: sampling-unit layouts, latent fields drawn from the
// basis/IGMRF prior and noisy aggregated observations.

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "splinecos/basis.hpp"
#include "splinecos/model.hpp"
#include "splinecos/random.hpp"

namespace splinecos {

enum class Scenario { RegularGrid, IrregularGrid, Sparse, Overlapping, FullBinary };

const char* to_string(Scenario s);
/// Accepts "regular-grid", "irregular-grid", "sparse", "overlapping", "full-binary".
Scenario parse_scenario(const std::string& name);

struct ScenarioConfig {
  Scenario kind = Scenario::RegularGrid;
  double lo1 = 0.0, hi1 = 100.0, lo2 = 0.0, hi2 = 100.0;
  /// Basis of the simulated field. n_basis2 == 1 makes the second
  /// coordinate degenerate (a 1D scenario on [lo1, hi1]).
  int n_basis1 = 20, n_basis2 = 20, order = 3;
  double kappa = 0.09;
  /// sigma^2: the error variance of every unit on a regular grid, and the
  /// variance of a unit of area one elsewhere (sigma^2 / |c|).
  double noise_variance = 1.0;
  Aggregation aggregation = Aggregation::Average;
  /// Regular grid cells per axis; the irregular partition has cells1*cells2 units.
  int cells1 = 10, cells2 = 10;
  /// Target fraction of the domain covered by sparse/overlapping units.
  double coverage = 0.5;
  /// Side lengths of sparse/overlapping units, as fractions of the domain side.
  double min_side = 0.04, max_side = 0.16;
  int max_attempts = 100000;

  void validate() const;
  TensorBasis basis() const;
  bool one_dimensional() const noexcept { return n_basis2 == 1; }
  bool heteroscedastic() const noexcept { return kind != Scenario::RegularGrid; }
  double domain_area() const noexcept { return (hi1 - lo1) * (hi2 - lo2); }
};

std::vector<SupportGeometry> gen_units(const ScenarioConfig& cfg, Rng& rng);

struct SimulatedData {
  Eigen::VectorXd field;      // delta
  Eigen::VectorXd noiseless;  // B(c) delta
  Eigen::VectorXd variances;  // error variance per unit
  std::vector<double> values;
};

SimulatedData gen_data(const ScenarioConfig& cfg, std::span<const SupportGeometry> units, Rng& rng);

/// Exact area of the union of rectangles (points contribute nothing).
double union_area(std::span<const SupportGeometry> units);

/// Multi-source binary reference scenario on the line [0, length].
struct FullBinaryConfig {
  double length = 40.0;
  int n_basis = 20;
  int order = 3;
  double beta0 = 0.0;
  double beta1 = 0.7;
  double beta2 = -0.6;
  double bias = 0.3;
  double alpha1 = 0.0;
  double alpha2 = 0.5;
  double kappa_v = 1.0;
  /// Residual field scale; <= 0 selects the unit-variance calibration.
  double kappa_w = 0.0;
  double predictor_variance = 0.05;
  double response_variance = 0.25;
  double predictor_unit1 = 40.0 / 7.0;   // 5.71
  double predictor_unit2 = 40.0 / 18.0;  // 2.22
  double response_unit1 = 4.0;
  double response_unit2 = 40.0 / 14.0;   // 2.86

  TensorBasis basis() const;
};

struct FullBinaryData {
  std::vector<ResponseSource> responses;
  std::vector<PredictorSource> predictors;
  Eigen::VectorXd residual_field;
  std::vector<Eigen::VectorXd> predictor_fields;
  double kappa_w = 0.0;
};

FullBinaryData gen_full_binary(const FullBinaryConfig& cfg, Rng& rng);

}  // namespace splinecos
