#pragma once

// Three-layer hierarchical model with change of support.
//
//   latent:     eta(s) = beta0 + sum_j beta_j V_j(s) + W(s),
//               V_j = B_j delta_vj, W = B_w delta_w, deltas ~ IGMRF(kappa P)
//   support:    V_j(c), W(c) are averages (or totals) of the point processes
//   observed:   response source k:  z_k = b_k + eta(c) + eps_k,
//                 y_k = z_k (Gaussian) or 1{z_k > 0} (probit)
//               predictor j:        x_j = alpha_j + V_j(c) + xi_j
//
// Coefficients are stacked as beta* = [beta0, b_1..b_{K-1}, beta_1..beta_p]
// where the biases belong to the non-reliable response sources in input order.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "splinecos/basis.hpp"
#include "splinecos/gmrf.hpp"

namespace splinecos {

enum class Family { Gaussian, BernoulliProbit };

/// Diagonal of D in Var(eps) = sigma^2 D: 1, log|c| or 1/|c|.
enum class VarianceFunction { Constant, LogArea, InverseArea };

struct ResponseSource {
  std::string id;
  Family family = Family::Gaussian;
  std::vector<SupportGeometry> supports;
  std::vector<double> values;
  /// The reliable source has its bias fixed at zero.
  bool reliable = false;
  VarianceFunction variance = VarianceFunction::Constant;
  /// Unit sizes used by the variance function. Defaults to the support
  /// areas; needed when a rectangle is modelled through its centroid.
  std::vector<double> unit_areas;
};

struct PredictorSource {
  std::string id;
  std::vector<SupportGeometry> supports;
  std::vector<double> values;
  VarianceFunction variance = VarianceFunction::Constant;
  std::vector<double> unit_areas;
};

struct GammaPrior {
  double shape = 0.01;
  double rate = 0.01;
};

struct InverseGammaPrior {
  double shape = 0.01;
  double scale = 0.01;
};

enum class KappaTreatment {
  Sample,        ///< Gamma prior, updated every sweep
  Fixed,         ///< held at `kappa`
  UnitVariance,  ///< fixed at the value giving average prior variance 1 at points
};

struct FieldConfig {
  TensorBasis basis;
  KappaTreatment treatment = KappaTreatment::Sample;
  double kappa = 1.0;
  GammaPrior kappa_prior;
};

struct ModelConfig {
  FieldConfig residual;
  /// One field per predictor source, in the same order.
  std::vector<FieldConfig> predictors;
  /// Sigma_beta = coefficient_prior_variance * I.
  double coefficient_prior_variance = 100.0;
  double intercept_prior_variance = 100.0;
  InverseGammaPrior response_variance_prior;
  InverseGammaPrior predictor_variance_prior;
  /// Binarisation threshold; must be 0 for probit sources.
  double threshold = 0.0;
  /// Draw every delta field under the constraint sum(delta) = 0.
  bool center_fields = true;
};

/// Cached per-source design matrices and Gram products.
struct ResponseBlock {
  ResponseSource source;
  DesignMatrix residual_design;                 // B_w(L_k)
  std::vector<DesignMatrix> predictor_designs;  // B_j(L_k)
  Eigen::VectorXd inverse_variance_weights;     // diag(D_k^{-1})
  SparseMatrix residual_gram;                   // B_w' D^-1 B_w
  std::vector<SparseMatrix> predictor_grams;    // B_j' D^-1 B_j
  /// Column of the source's bias in beta*, or -1 for the reliable source.
  int bias_column = -1;
  std::size_t size() const noexcept { return source.values.size(); }
};

struct PredictorBlock {
  PredictorSource source;
  DesignMatrix design;                       // B_j(L_j)
  Eigen::VectorXd inverse_variance_weights;  // diag(D_j^{-1})
  SparseMatrix gram;
  std::size_t size() const noexcept { return source.values.size(); }
};

/// Posterior-relevant values of the latent layer.
struct LatentState {
  Eigen::VectorXd coefficients;               // beta*
  Eigen::VectorXd residual_field;             // delta_w
  std::vector<Eigen::VectorXd> predictor_fields;  // delta_vj
};

class ModelSpec {
 public:
  /// Validates the configuration and data and caches every design matrix.
  static ModelSpec build(ModelConfig config, std::vector<ResponseSource> responses,
                         std::vector<PredictorSource> predictors);

  const ModelConfig& config() const noexcept { return config_; }
  const std::vector<ResponseBlock>& responses() const noexcept { return responses_; }
  const std::vector<PredictorBlock>& predictors() const noexcept { return predictors_; }
  const GmrfPrior& residual_prior() const noexcept { return residual_prior_; }
  const std::vector<GmrfPrior>& predictor_priors() const noexcept { return predictor_priors_; }

  std::size_t num_responses() const noexcept { return responses_.size(); }
  std::size_t num_predictors() const noexcept { return predictors_.size(); }
  std::size_t num_coefficients() const noexcept { return 1 + num_biases() + num_predictors(); }
  std::size_t num_biases() const noexcept { return responses_.size() - 1; }
  std::size_t slope_column(std::size_t j) const noexcept { return 1 + num_biases() + j; }
  bool has_probit() const noexcept;
  bool samples_residual_kappa() const noexcept {
    return config_.residual.treatment == KappaTreatment::Sample;
  }
  bool samples_predictor_kappa(std::size_t j) const noexcept {
    return config_.predictors[j].treatment == KappaTreatment::Sample;
  }
  /// Fixed residual scale (meaningful when not sampled).
  double residual_kappa() const noexcept { return residual_kappa_; }
  double predictor_kappa(std::size_t j) const noexcept { return predictor_kappas_[j]; }

  /// Replace the observed values of a source, keeping its supports. A
  /// Gaussian response's chain state holds its own copy (latent_responses).
  void set_response_values(std::size_t k, std::vector<double> values);
  void set_predictor_values(std::size_t j, std::vector<double> values);

  /// Names of the beta* entries: "beta0", "bias[<id>]", "beta[<id>]".
  std::vector<std::string> coefficient_names() const;

  /// eta on arbitrary supports (no source biases).
  Eigen::VectorXd latent_eta(const LatentState& state,
                             std::span<const SupportGeometry> supports) const;

  /// V*_k beta* + B_w(L_k) delta_w for source k, using cached designs.
  Eigen::VectorXd source_mean(const LatentState& state, std::size_t k) const;
  /// Columns [1 | A_k | V_k] of source k (V_k evaluated at the current fields).
  Eigen::MatrixXd coefficient_design(const LatentState& state, std::size_t k) const;

 private:
  ModelConfig config_;
  std::vector<ResponseBlock> responses_;
  std::vector<PredictorBlock> predictors_;
  GmrfPrior residual_prior_;
  std::vector<GmrfPrior> predictor_priors_;
  double residual_kappa_ = 1.0;
  std::vector<double> predictor_kappas_;

  ModelSpec(ModelConfig config, GmrfPrior residual_prior);
};

/// Diagonal entries of D for the given unit sizes.
Eigen::VectorXd variance_weights(VarianceFunction fn, std::span<const double> areas);

/// Scale kappa at which the prior variance of B(s) delta, averaged over a
/// probe grid of points, equals one.
double unit_variance_kappa(const TensorBasis& basis, const SparseMatrix& structure,
                           int probes_per_axis = 20);

/// Replace each rectangle by its centroid, keeping its area for the variance
/// function: the naive treatment of aggregated data.
ResponseSource to_centroids(ResponseSource source);

const char* to_string(Family family);
const char* to_string(VarianceFunction fn);
const char* to_string(KappaTreatment treatment);

}  // namespace splinecos
