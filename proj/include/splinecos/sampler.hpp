#pragma once

// Gibbs sampler for the change-of-support model. Every update is a
// conjugate draw from its full conditional:
//
//   z_k      truncated normal (probit sources only)
//   delta_w  normal, sparse precision sum_k B_w'D^-1B_w / s2_k + kappa_w P_w
//   delta_vj normal, sparse precision from responses, predictor j and prior
//   beta*    normal, dense
//   alpha_j  normal, scalar
//   s2_y, s2_x inverse gamma;  kappa gamma

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>

#include "splinecos/model.hpp"
#include "splinecos/random.hpp"

namespace splinecos {

using DrawMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SamplerConfig {
  int n_iter = 10000;
  int burn_in = 2000;
  int thin = 5;
  int n_chains = 1;
  std::uint64_t seed = 1;
  /// Chains run concurrently on up to this many threads.
  int threads = 1;

  void validate() const;
  /// Retained draws per chain.
  std::size_t draws_per_chain() const noexcept {
    return static_cast<std::size_t>((n_iter - burn_in) / thin);
  }
};

struct ChainState : LatentState {
  /// z_k; equal to the observations for Gaussian sources.
  std::vector<Eigen::VectorXd> latent_responses;
  Eigen::VectorXd intercepts;           // alpha_j
  Eigen::VectorXd response_variances;   // sigma2_{y_k}
  Eigen::VectorXd predictor_variances;  // sigma2_{x_j}
  double residual_kappa = 1.0;
  Eigen::VectorXd predictor_kappas;
  std::size_t iteration = 0;
};

/// beta*, alpha and deltas at zero, variances and sampled scales at one,
/// probit z at +-0.5 by label.
ChainState initial_state(const ModelSpec& spec);

/// Mean and covariance of a Gaussian full conditional.
struct GaussianMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

/// Samples N(Q^{-1} b, Q^{-1}) for a sparse precision Q = sum_i w_i C_i that
/// is a weighted sum of fixed components. The sparsity pattern is analysed
/// once; each update only refreshes values and refactorizes. Optionally
/// conditions on sum(x) = 0.
class FieldSampler {
 public:
  FieldSampler(std::vector<SparseMatrix> components, bool zero_sum, double ridge = 0.0);

  /// Assemble and factorize Q for the given component weights.
  void set_weights(const std::vector<double>& weights);
  const SparseMatrix& precision() const noexcept { return precision_; }

  Eigen::VectorXd mean(const Eigen::VectorXd& linear) const;
  Eigen::VectorXd draw(const Eigen::VectorXd& linear, Rng& rng) const;
  /// Dense conditional covariance; test and diagnostic use only.
  Eigen::MatrixXd covariance() const;

 private:
  Eigen::VectorXd constrain(Eigen::VectorXd x) const;

  std::vector<Eigen::VectorXd> aligned_;  // component values on the union pattern
  SparseMatrix precision_;
  std::unique_ptr<Eigen::SimplicialLLT<SparseMatrix>> llt_;
  Eigen::VectorXd null_solve_;  // Q^{-1} 1
  bool zero_sum_;
  double ridge_;
};

class GibbsSampler {
 public:
  explicit GibbsSampler(const ModelSpec& spec);

  void step_z(ChainState& state, Rng& rng) const;
  void step_residual_field(ChainState& state, Rng& rng);
  void step_predictor_field(ChainState& state, Rng& rng, std::size_t j);
  void step_coefficients(ChainState& state, Rng& rng) const;
  void step_intercept(ChainState& state, Rng& rng, std::size_t j) const;
  void step_variances(ChainState& state, Rng& rng) const;
  void step_kappas(ChainState& state, Rng& rng) const;
  /// One full sweep in the fixed order z, delta_w, delta_v, beta*, alpha,
  /// variances, kappas.
  void sweep(ChainState& state, Rng& rng);

  /// Full-conditional moments evaluated through the sparse path.
  GaussianMoments residual_field_moments(const ChainState& state);
  GaussianMoments predictor_field_moments(const ChainState& state, std::size_t j);
  GaussianMoments coefficient_moments(const ChainState& state) const;
  /// (mean, variance) of alpha_j.
  std::pair<double, double> intercept_moments(const ChainState& state, std::size_t j) const;
  /// (shape, scale) of the inverse-gamma conditional of sigma2_{y_k}.
  std::pair<double, double> response_variance_posterior(const ChainState& state, std::size_t k) const;
  std::pair<double, double> predictor_variance_posterior(const ChainState& state, std::size_t j) const;
  /// (shape, rate) of the gamma conditional of kappa_vj.
  std::pair<double, double> predictor_kappa_posterior(const ChainState& state, std::size_t j) const;
  std::pair<double, double> residual_kappa_posterior(const ChainState& state) const;

  /// Precision assembled for the last residual/predictor field update.
  const SparseMatrix& residual_precision() const noexcept { return residual_sampler_.precision(); }
  const SparseMatrix& predictor_precision(std::size_t j) const noexcept {
    return predictor_samplers_[j].precision();
  }

  const ModelSpec& spec() const noexcept { return spec_; }

 private:
  Eigen::VectorXd prepare_residual_field(const ChainState& state);
  Eigen::VectorXd prepare_predictor_field(const ChainState& state, std::size_t j);

  const ModelSpec& spec_;
  FieldSampler residual_sampler_;
  std::vector<FieldSampler> predictor_samplers_;
};

/// Column layout of a stored draw.
struct ParameterLayout {
  std::vector<std::string> names;
  std::size_t coefficients = 0;
  std::size_t intercepts = 0;
  std::size_t response_variances = 0;
  std::size_t predictor_variances = 0;
  std::size_t residual_kappa = 0;
  std::size_t predictor_kappas = 0;
  std::size_t residual_field = 0;
  std::vector<std::size_t> predictor_fields;
  std::size_t num_coefficients = 0;
  std::size_t num_predictors = 0;
  std::size_t num_responses = 0;
  std::size_t residual_size = 0;
  std::vector<std::size_t> predictor_sizes;

  static ParameterLayout from_spec(const ModelSpec& spec);
  std::size_t size() const noexcept { return names.size(); }
  std::size_t index_of(const std::string& name) const;

  void store(const ChainState& state, Eigen::Ref<Eigen::RowVectorXd> row) const;
  LatentState latent(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
};

/// Thinned post-burn-in draws; one matrix per chain, one row per draw.
struct PosteriorSamples {
  ParameterLayout layout;
  std::vector<DrawMatrix> chains;
  SamplerConfig config;

  std::size_t num_draws() const noexcept;
  /// All chains stacked in chain order.
  DrawMatrix stacked() const;
  Eigen::VectorXd column(std::size_t parameter) const;
};

/// Run every chain for n_iter sweeps; deterministic given the seed.
PosteriorSamples run(const ModelSpec& spec, const SamplerConfig& config);

/// One chain with an explicit starting state and stream.
DrawMatrix run_chain(const ModelSpec& spec, const SamplerConfig& config, ChainState state,
                          Rng& rng);

}  // namespace splinecos
