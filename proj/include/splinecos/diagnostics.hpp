#pragma once

// Convergence diagnostics over per-chain draws of one parameter.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "splinecos/sampler.hpp"

namespace splinecos {

/// Multi-chain effective sample size with Geyer's initial monotone sequence
/// truncation. Constant draws give the total draw count.
double effective_sample_size(const std::vector<Eigen::VectorXd>& chains);

/// Split potential scale reduction. Needs at least two chains; draws that
/// are constant and equal across chains give exactly 1.
double split_rhat(const std::vector<Eigen::VectorXd>& chains);

struct ParameterDiagnostics {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double ess = 0.0;
  /// Absent for a single chain.
  std::optional<double> rhat;
};

std::vector<ParameterDiagnostics> diagnose(const PosteriorSamples& samples);

}  // namespace splinecos
