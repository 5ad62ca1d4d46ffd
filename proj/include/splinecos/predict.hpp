#pragma once

// Posterior prediction of the latent processes on arbitrary supports.
//
// Every function maps the stored draws through the deterministic relation
//   eta*(c) = beta0 + sum_j beta_j B_j(c) delta_vj + B_w(c) delta_w
// so predictions on a rectangle are exact averages of point predictions.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "splinecos/model.hpp"
#include "splinecos/sampler.hpp"

namespace splinecos {

enum class FieldKind {
  Eta,          ///< full linear predictor
  Residual,     ///< W
  Predictor,    ///< V_j
  Suitability,  ///< sum_j beta_j V_j
};

struct FieldRequest {
  FieldKind kind = FieldKind::Eta;
  /// Predictor index for FieldKind::Predictor.
  std::size_t predictor = 0;
};

/// n_draws x n_targets; rows follow PosteriorSamples::stacked().
Eigen::MatrixXd predict_field(const PosteriorSamples& samples, const ModelSpec& spec,
                              std::span<const SupportGeometry> targets, FieldRequest field = {});

inline Eigen::MatrixXd predict_eta(const PosteriorSamples& samples, const ModelSpec& spec,
                                   std::span<const SupportGeometry> targets) {
  return predict_field(samples, spec, targets, {FieldKind::Eta, 0});
}

/// Fraction of draws exceeding the truth, per target.
Eigen::VectorXd prob_overprediction(const Eigen::MatrixXd& draws, const Eigen::VectorXd& truth);

/// Posterior mean of Phi((eta* + b_k) / sigma_{y_k}) for response source k.
Eigen::VectorXd success_probability(const PosteriorSamples& samples, const ModelSpec& spec,
                                    std::span<const SupportGeometry> targets, std::size_t source);

/// Sample quantile by linear interpolation of order statistics,
/// h = (n - 1) p. `sorted` must be ascending.
double quantile_sorted(std::span<const double> sorted, double p);

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q50 = 0.0;
  double q975 = 0.0;
};

Summary summarize(std::span<const double> draws);
/// One summary per column.
std::vector<Summary> summarize_columns(const Eigen::MatrixXd& draws);

struct PredictionTable {
  std::vector<Summary> summaries;
  /// Present when a truth vector was supplied.
  std::optional<Eigen::VectorXd> overprediction;
};

/// Summaries of a field at many targets without holding every draw of every
/// target at once: targets are processed in blocks, in parallel.
PredictionTable predict_summaries(const PosteriorSamples& samples, const ModelSpec& spec,
                                  std::span<const SupportGeometry> targets, FieldRequest field,
                                  const Eigen::VectorXd* truth = nullptr, int threads = 1,
                                  std::size_t block = 512);

FieldRequest parse_field(const std::string& name, const ModelSpec& spec);

}  // namespace splinecos
