#include "splinecos/model.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "splinecos/error.hpp"

namespace splinecos {

namespace {

SparseMatrix weighted_gram(const DesignMatrix& design, const Eigen::VectorXd& weights) {
  const SparseMatrix b = design;  // column-major copy
  const SparseMatrix weighted = weights.asDiagonal() * b;
  SparseMatrix gram = SparseMatrix(b.transpose()) * weighted;
  gram = 0.5 * (gram + SparseMatrix(gram.transpose()));
  gram.makeCompressed();
  return gram;
}

std::vector<double> resolve_areas(const std::string& id, std::span<const SupportGeometry> supports,
                                  const std::vector<double>& explicit_areas, VarianceFunction fn) {
  if (!explicit_areas.empty()) {
    if (explicit_areas.size() != supports.size()) {
      throw ValidationError("source '" + id + "': unit_areas length does not match supports");
    }
    return explicit_areas;
  }
  std::vector<double> areas(supports.size());
  for (std::size_t i = 0; i < supports.size(); ++i) {
    areas[i] = supports[i].area();
    if (fn != VarianceFunction::Constant && !supports[i].is_rect()) {
      throw ValidationError("source '" + id + "': variance function " + to_string(fn) +
                            " needs rectangle supports or explicit unit areas");
    }
  }
  return areas;
}

Eigen::VectorXd inverse_weights(const std::string& id, VarianceFunction fn,
                                std::span<const double> areas) {
  try {
    return variance_weights(fn, areas).cwiseInverse();
  } catch (const ValidationError& e) {
    throw ValidationError("source '" + id + "': " + e.what());
  }
}

DesignMatrix checked_design(const std::string& what, const TensorBasis& basis,
                            std::span<const SupportGeometry> supports) {
  try {
    return design_matrix(basis, supports);
  } catch (const ValidationError& e) {
    throw ValidationError(what + ": " + e.what());
  }
}

void check_field(const std::string& name, const FieldConfig& field) {
  if (field.treatment != KappaTreatment::UnitVariance && !(field.kappa > 0.0)) {
    throw ValidationError(name + ": kappa must be positive");
  }
  if (!(field.kappa_prior.shape > 0.0) || !(field.kappa_prior.rate > 0.0)) {
    throw ValidationError(name + ": gamma prior hyperparameters must be positive");
  }
}

}  // namespace

const char* to_string(Family family) {
  return family == Family::Gaussian ? "gaussian" : "bernoulli-probit";
}

const char* to_string(VarianceFunction fn) {
  switch (fn) {
    case VarianceFunction::Constant: return "constant";
    case VarianceFunction::LogArea: return "log-area";
    case VarianceFunction::InverseArea: return "inverse-area";
  }
  return "unknown";
}

const char* to_string(KappaTreatment treatment) {
  switch (treatment) {
    case KappaTreatment::Sample: return "sample";
    case KappaTreatment::Fixed: return "fixed";
    case KappaTreatment::UnitVariance: return "unit-variance";
  }
  return "unknown";
}

Eigen::VectorXd variance_weights(VarianceFunction fn, std::span<const double> areas) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(areas.size()));
  for (std::size_t i = 0; i < areas.size(); ++i) {
    const double a = areas[i];
    switch (fn) {
      case VarianceFunction::Constant:
        d[static_cast<Eigen::Index>(i)] = 1.0;
        break;
      case VarianceFunction::LogArea:
        if (!(a > 1.0)) throw ValidationError("log-area variance needs unit areas > 1");
        d[static_cast<Eigen::Index>(i)] = std::log(a);
        break;
      case VarianceFunction::InverseArea:
        if (!(a > 0.0)) throw ValidationError("inverse-area variance needs positive unit areas");
        d[static_cast<Eigen::Index>(i)] = 1.0 / a;
        break;
    }
  }
  return d;
}

double unit_variance_kappa(const TensorBasis& basis, const SparseMatrix& structure,
                           int probes_per_axis) {
  const Eigen::Index q = structure.rows();
  if (q == 1) throw ValidationError("unit-variance calibration needs more than one basis function");
  const SparseMatrix grounded = structure.topLeftCorner(q - 1, q - 1);
  Eigen::SimplicialLLT<SparseMatrix> llt(grounded);
  if (llt.info() != Eigen::Success) throw NumericalError("structure matrix is not connected");

  const int n2 = basis.q2() == 1 ? 1 : probes_per_axis;
  std::vector<SupportGeometry> probes;
  for (int a = 0; a < probes_per_axis; ++a) {
    for (int b = 0; b < n2; ++b) {
      const double u = (a + 0.5) / probes_per_axis;
      const double v = (b + 0.5) / n2;
      probes.push_back(SupportGeometry::point(
          basis.first.lo() + u * (basis.first.hi() - basis.first.lo()),
          basis.second.lo() + v * (basis.second.hi() - basis.second.lo())));
    }
  }
  const Eigen::MatrixXd rows = Eigen::MatrixXd(design_matrix(basis, probes));
  double total = 0.0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    Eigen::VectorXd b = rows.row(i).transpose();
    b.array() -= b.mean();
    // Grounded solve of P x = b for b orthogonal to the null space.
    Eigen::VectorXd x = Eigen::VectorXd::Zero(q);
    x.head(q - 1) = llt.solve(b.head(q - 1));
    x.array() -= x.mean();
    total += b.dot(x);
  }
  return total / static_cast<double>(rows.rows());
}

ResponseSource to_centroids(ResponseSource source) {
  if (source.unit_areas.empty()) {
    source.unit_areas.reserve(source.supports.size());
    for (const auto& s : source.supports) source.unit_areas.push_back(s.area());
  }
  for (auto& s : source.supports) {
    const Point c = s.centroid();
    s = SupportGeometry::point(c.x1, c.x2);
  }
  return source;
}

ModelSpec::ModelSpec(ModelConfig config, GmrfPrior residual_prior)
    : config_(std::move(config)), residual_prior_(std::move(residual_prior)) {}

bool ModelSpec::has_probit() const noexcept {
  for (const auto& r : responses_) {
    if (r.source.family == Family::BernoulliProbit) return true;
  }
  return false;
}

ModelSpec ModelSpec::build(ModelConfig config, std::vector<ResponseSource> responses,
                           std::vector<PredictorSource> predictors) {
  if (responses.empty()) throw ValidationError("model needs at least one response source");
  if (config.predictors.size() != predictors.size()) {
    std::ostringstream os;
    os << "model config declares " << config.predictors.size() << " predictor fields but "
       << predictors.size() << " predictor sources were given";
    throw ValidationError(os.str());
  }
  if (!(config.coefficient_prior_variance > 0.0) || !(config.intercept_prior_variance > 0.0) ||
      !(config.response_variance_prior.shape > 0.0) || !(config.response_variance_prior.scale > 0.0) ||
      !(config.predictor_variance_prior.shape > 0.0) || !(config.predictor_variance_prior.scale > 0.0)) {
    throw ValidationError("all prior hyperparameters must be positive");
  }
  check_field("residual field", config.residual);
  for (std::size_t j = 0; j < config.predictors.size(); ++j) {
    check_field("predictor field " + std::to_string(j), config.predictors[j]);
  }

  std::set<std::string> ids;
  std::size_t reliable = 0;
  bool probit = false;
  for (const auto& r : responses) {
    if (!ids.insert(r.id).second) throw ValidationError("duplicate source id '" + r.id + "'");
    if (r.reliable) ++reliable;
    if (r.family == Family::BernoulliProbit) probit = true;
  }
  for (const auto& p : predictors) {
    if (!ids.insert(p.id).second) throw ValidationError("duplicate source id '" + p.id + "'");
  }
  if (reliable != 1) {
    throw ValidationError("exactly one response source must be marked reliable (found " +
                          std::to_string(reliable) + ")");
  }
  if (probit) {
    if (config.threshold != 0.0) {
      throw ValidationError("probit responses require the threshold fixed at 0");
    }
    if (config.residual.treatment == KappaTreatment::Sample) {
      throw ValidationError("probit responses require a fixed residual-field kappa (fixed or unit-variance)");
    }
  }

  GmrfPrior residual_prior(structure_matrix_grid(static_cast<int>(config.residual.basis.q1()),
                                                static_cast<int>(config.residual.basis.q2())),
                           config.residual.treatment == KappaTreatment::UnitVariance ? 1.0
                                                                                    : config.residual.kappa);
  ModelSpec spec(std::move(config), std::move(residual_prior));
  const ModelConfig& cfg = spec.config_;
  const TensorBasis& wb = cfg.residual.basis;
  spec.residual_kappa_ = cfg.residual.treatment == KappaTreatment::UnitVariance
                             ? unit_variance_kappa(wb, spec.residual_prior_.structure())
                             : cfg.residual.kappa;
  spec.residual_prior_ = spec.residual_prior_.with_scale(spec.residual_kappa_);

  for (std::size_t j = 0; j < cfg.predictors.size(); ++j) {
    const TensorBasis& basis = cfg.predictors[j].basis;
    GmrfPrior prior(structure_matrix_grid(static_cast<int>(basis.q1()), static_cast<int>(basis.q2())), 1.0);
    const double kappa = cfg.predictors[j].treatment == KappaTreatment::UnitVariance
                             ? unit_variance_kappa(basis, prior.structure())
                             : cfg.predictors[j].kappa;
    spec.predictor_kappas_.push_back(kappa);
    spec.predictor_priors_.push_back(prior.with_scale(kappa));
  }

  int next_bias = 1;
  for (auto& source : responses) {
    const std::string& id = source.id;
    if (source.supports.empty()) throw ValidationError("response source '" + id + "' has no observations");
    if (source.supports.size() != source.values.size()) {
      throw ValidationError("response source '" + id + "': supports and values differ in length");
    }
    for (double v : source.values) {
      if (!std::isfinite(v)) throw ValidationError("response source '" + id + "' has non-finite values");
      if (source.family == Family::BernoulliProbit && v != 0.0 && v != 1.0) {
        throw ValidationError("response source '" + id + "': probit values must be 0 or 1");
      }
    }
    ResponseBlock block;
    const auto areas = resolve_areas(id, source.supports, source.unit_areas, source.variance);
    block.inverse_variance_weights = inverse_weights(id, source.variance, areas);
    block.residual_design = checked_design("response source '" + id + "'", wb, source.supports);
    block.residual_gram = weighted_gram(block.residual_design, block.inverse_variance_weights);
    for (std::size_t j = 0; j < cfg.predictors.size(); ++j) {
      block.predictor_designs.push_back(
          checked_design("response source '" + id + "'", cfg.predictors[j].basis, source.supports));
      block.predictor_grams.push_back(
          weighted_gram(block.predictor_designs.back(), block.inverse_variance_weights));
    }
    block.bias_column = source.reliable ? -1 : next_bias++;
    block.source = std::move(source);
    spec.responses_.push_back(std::move(block));
  }

  for (std::size_t j = 0; j < predictors.size(); ++j) {
    auto& source = predictors[j];
    const std::string& id = source.id;
    if (source.supports.empty()) throw ValidationError("predictor source '" + id + "' has no observations");
    if (source.supports.size() != source.values.size()) {
      throw ValidationError("predictor source '" + id + "': supports and values differ in length");
    }
    for (double v : source.values) {
      if (!std::isfinite(v)) throw ValidationError("predictor source '" + id + "' has non-finite values");
    }
    PredictorBlock block;
    const auto areas = resolve_areas(id, source.supports, source.unit_areas, source.variance);
    block.inverse_variance_weights = inverse_weights(id, source.variance, areas);
    block.design = checked_design("predictor source '" + id + "'", cfg.predictors[j].basis, source.supports);
    block.gram = weighted_gram(block.design, block.inverse_variance_weights);
    block.source = std::move(source);
    spec.predictors_.push_back(std::move(block));
  }
  return spec;
}

void ModelSpec::set_response_values(std::size_t k, std::vector<double> values) {
  if (k >= responses_.size()) throw ValidationError("response source index out of range");
  ResponseBlock& block = responses_[k];
  if (values.size() != block.size()) throw ValidationError("response '" + block.source.id + "': value count changed");
  for (double v : values) {
    if (block.source.family == Family::BernoulliProbit ? (v != 0.0 && v != 1.0) : !std::isfinite(v)) {
      throw ValidationError("response '" + block.source.id + "': invalid value");
    }
  }
  block.source.values = std::move(values);
}

void ModelSpec::set_predictor_values(std::size_t j, std::vector<double> values) {
  if (j >= predictors_.size()) throw ValidationError("predictor source index out of range");
  PredictorBlock& block = predictors_[j];
  if (values.size() != block.size()) throw ValidationError("predictor '" + block.source.id + "': value count changed");
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("predictor '" + block.source.id + "': invalid value");
  }
  block.source.values = std::move(values);
}

std::vector<std::string> ModelSpec::coefficient_names() const {
  std::vector<std::string> names{"beta0"};
  for (const auto& r : responses_) {
    if (r.bias_column >= 0) names.push_back("bias[" + r.source.id + "]");
  }
  for (const auto& p : predictors_) names.push_back("beta[" + p.source.id + "]");
  return names;
}

Eigen::VectorXd ModelSpec::latent_eta(const LatentState& state,
                                      std::span<const SupportGeometry> supports) const {
  if (static_cast<std::size_t>(state.coefficients.size()) != num_coefficients() ||
      state.predictor_fields.size() != num_predictors() ||
      static_cast<std::size_t>(state.residual_field.size()) != config_.residual.basis.size()) {
    throw ValidationError("latent state dimensions do not match the model");
  }
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(supports.size()),
                                                  state.coefficients[0]);
  eta += design_matrix(config_.residual.basis, supports) * state.residual_field;
  for (std::size_t j = 0; j < num_predictors(); ++j) {
    const double slope = state.coefficients[static_cast<Eigen::Index>(slope_column(j))];
    if (slope == 0.0) continue;
    if (static_cast<std::size_t>(state.predictor_fields[j].size()) != config_.predictors[j].basis.size()) {
      throw ValidationError("predictor field dimension does not match its basis");
    }
    eta += slope * (design_matrix(config_.predictors[j].basis, supports) * state.predictor_fields[j]);
  }
  return eta;
}

Eigen::MatrixXd ModelSpec::coefficient_design(const LatentState& state, std::size_t k) const {
  const ResponseBlock& block = responses_[k];
  const auto n = static_cast<Eigen::Index>(block.size());
  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(num_coefficients()));
  design.col(0).setOnes();
  if (block.bias_column >= 0) design.col(block.bias_column).setOnes();
  for (std::size_t j = 0; j < num_predictors(); ++j) {
    design.col(static_cast<Eigen::Index>(slope_column(j))) =
        block.predictor_designs[j] * state.predictor_fields[j];
  }
  return design;
}

Eigen::VectorXd ModelSpec::source_mean(const LatentState& state, std::size_t k) const {
  const ResponseBlock& block = responses_[k];
  Eigen::VectorXd mean = block.residual_design * state.residual_field;
  mean.array() += state.coefficients[0];
  if (block.bias_column >= 0) mean.array() += state.coefficients[block.bias_column];
  for (std::size_t j = 0; j < num_predictors(); ++j) {
    mean += state.coefficients[static_cast<Eigen::Index>(slope_column(j))] *
            (block.predictor_designs[j] * state.predictor_fields[j]);
  }
  return mean;
}

}  // namespace splinecos
