#include "splinecos/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <Eigen/Dense>

#include "splinecos/error.hpp"

namespace splinecos {

void SamplerConfig::validate() const {
  if (n_iter <= 0) throw ValidationError("n_iter must be positive");
  if (burn_in < 0 || burn_in >= n_iter) throw ValidationError("burn_in must satisfy 0 <= burn_in < n_iter");
  if (thin < 1) throw ValidationError("thin must be >= 1");
  if (n_chains < 1) throw ValidationError("n_chains must be >= 1");
  if (threads < 1) throw ValidationError("threads must be >= 1");
  if (draws_per_chain() == 0) throw ValidationError("sampler settings retain no draws");
}

ChainState initial_state(const ModelSpec& spec) {
  ChainState state;
  state.coefficients = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.num_coefficients()));
  state.residual_field = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.config().residual.basis.size()));
  for (std::size_t j = 0; j < spec.num_predictors(); ++j) {
    state.predictor_fields.push_back(
        Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.config().predictors[j].basis.size())));
  }
  for (const auto& block : spec.responses()) {
    Eigen::VectorXd z = Eigen::Map<const Eigen::VectorXd>(block.source.values.data(),
                                                          static_cast<Eigen::Index>(block.size()));
    if (block.source.family == Family::BernoulliProbit) {
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = z[i] == 1.0 ? 0.5 : -0.5;
    }
    state.latent_responses.push_back(std::move(z));
  }
  const auto p = static_cast<Eigen::Index>(spec.num_predictors());
  state.intercepts = Eigen::VectorXd::Zero(p);
  state.response_variances = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(spec.num_responses()));
  state.predictor_variances = Eigen::VectorXd::Ones(p);
  state.residual_kappa = spec.samples_residual_kappa() ? 1.0 : spec.residual_kappa();
  state.predictor_kappas = Eigen::VectorXd::Ones(p);
  for (std::size_t j = 0; j < spec.num_predictors(); ++j) {
    if (!spec.samples_predictor_kappa(j)) state.predictor_kappas[static_cast<Eigen::Index>(j)] = spec.predictor_kappa(j);
  }
  return state;
}

// ---------------------------------------------------------------------------
// FieldSampler

FieldSampler::FieldSampler(std::vector<SparseMatrix> components, bool zero_sum, double ridge)
    : llt_(std::make_unique<Eigen::SimplicialLLT<SparseMatrix>>()), zero_sum_(zero_sum), ridge_(ridge) {
  if (components.empty()) throw ValidationError("field sampler needs at least one component");
  const Eigen::Index q = components.front().rows();
  SparseMatrix pattern(q, q);
  for (const auto& c : components) {
    if (c.rows() != q || c.cols() != q) throw ValidationError("field components differ in size");
    pattern += SparseMatrix(c.cwiseAbs());
  }
  // The diagonal is always present so a ridge can be added in place.
  SparseMatrix identity(q, q);
  identity.setIdentity();
  pattern += identity;
  pattern.makeCompressed();
  for (const auto& c : components) {
    Eigen::VectorXd values = Eigen::VectorXd::Zero(pattern.nonZeros());
    Eigen::Index pos = 0;
    for (Eigen::Index col = 0; col < pattern.outerSize(); ++col) {
      for (SparseMatrix::InnerIterator it(pattern, col); it; ++it, ++pos) {
        values[pos] = c.coeff(it.row(), it.col());
      }
    }
    aligned_.push_back(std::move(values));
  }
  if (ridge_ != 0.0) {
    Eigen::VectorXd values = Eigen::VectorXd::Zero(pattern.nonZeros());
    Eigen::Index pos = 0;
    for (Eigen::Index col = 0; col < pattern.outerSize(); ++col) {
      for (SparseMatrix::InnerIterator it(pattern, col); it; ++it, ++pos) {
        if (it.row() == it.col()) values[pos] = ridge_;
      }
    }
    aligned_.push_back(std::move(values));
  }
  precision_ = pattern;
  llt_->analyzePattern(precision_);
}

void FieldSampler::set_weights(const std::vector<double>& weights) {
  const std::size_t expected = aligned_.size() - (ridge_ != 0.0 ? 1 : 0);
  if (weights.size() != expected) throw ValidationError("field sampler weight count mismatch");
  Eigen::Map<Eigen::VectorXd> values(precision_.valuePtr(), precision_.nonZeros());
  values.setZero();
  for (std::size_t i = 0; i < weights.size(); ++i) values += weights[i] * aligned_[i];
  if (ridge_ != 0.0) values += aligned_.back();
  llt_->factorize(precision_);
  if (llt_->info() != Eigen::Success) {
    throw NumericalError("conditional precision is not positive definite");
  }
  if (zero_sum_) {
    null_solve_ = llt_->solve(Eigen::VectorXd::Ones(precision_.rows()));
  }
}

Eigen::VectorXd FieldSampler::constrain(Eigen::VectorXd x) const {
  if (!zero_sum_) return x;
  // Conditioning by kriging on 1'x = 0.
  x -= null_solve_ * (x.sum() / null_solve_.sum());
  return x;
}

Eigen::VectorXd FieldSampler::mean(const Eigen::VectorXd& linear) const {
  return constrain(llt_->solve(linear));
}

Eigen::VectorXd FieldSampler::draw(const Eigen::VectorXd& linear, Rng& rng) const {
  const Eigen::Index q = precision_.rows();
  Eigen::VectorXd z(q);
  for (Eigen::Index i = 0; i < q; ++i) z[i] = rng.normal();
  // Q = P' L L' P, so P' L'^{-1} z ~ N(0, Q^{-1}).
  Eigen::VectorXd x = llt_->solve(linear);
  const Eigen::VectorXd u = llt_->matrixU().solve(z);
  const Eigen::VectorXd noise = llt_->permutationPinv() * u;
  x += noise;
  return constrain(std::move(x));
}

Eigen::MatrixXd FieldSampler::covariance() const {
  const Eigen::Index q = precision_.rows();
  Eigen::MatrixXd cov = llt_->solve(Eigen::MatrixXd::Identity(q, q));
  if (zero_sum_) cov -= null_solve_ * null_solve_.transpose() / null_solve_.sum();
  return cov;
}

// ---------------------------------------------------------------------------
// GibbsSampler

namespace {

std::vector<SparseMatrix> residual_components(const ModelSpec& spec) {
  std::vector<SparseMatrix> components;
  for (const auto& block : spec.responses()) components.push_back(block.residual_gram);
  components.push_back(spec.residual_prior().structure());
  return components;
}

std::vector<SparseMatrix> predictor_components(const ModelSpec& spec, std::size_t j) {
  std::vector<SparseMatrix> components;
  for (const auto& block : spec.responses()) components.push_back(block.predictor_grams[j]);
  components.push_back(spec.predictors()[j].gram);
  components.push_back(spec.predictor_priors()[j].structure());
  return components;
}

Eigen::Map<const Eigen::VectorXd> as_vector(const std::vector<double>& v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

}  // namespace

GibbsSampler::GibbsSampler(const ModelSpec& spec)
    : spec_(spec), residual_sampler_(residual_components(spec), spec.config().center_fields) {
  for (std::size_t j = 0; j < spec.num_predictors(); ++j) {
    predictor_samplers_.emplace_back(predictor_components(spec, j), spec.config().center_fields);
  }
}

void GibbsSampler::step_z(ChainState& state, Rng& rng) const {
  for (std::size_t k = 0; k < spec_.num_responses(); ++k) {
    const ResponseBlock& block = spec_.responses()[k];
    if (block.source.family != Family::BernoulliProbit) continue;
    const Eigen::VectorXd mean = spec_.source_mean(state, k);
    const double s2 = state.response_variances[static_cast<Eigen::Index>(k)];
    Eigen::VectorXd& z = state.latent_responses[k];
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double sd = std::sqrt(s2 / block.inverse_variance_weights[i]);
      z[i] = block.source.values[static_cast<std::size_t>(i)] == 1.0
                 ? truncated_normal_above(rng, mean[i], sd, 0.0)
                 : truncated_normal_below(rng, mean[i], sd, 0.0);
    }
  }
}

Eigen::VectorXd GibbsSampler::prepare_residual_field(const ChainState& state) {
  std::vector<double> weights;
  Eigen::VectorXd linear = Eigen::VectorXd::Zero(state.residual_field.size());
  for (std::size_t k = 0; k < spec_.num_responses(); ++k) {
    const ResponseBlock& block = spec_.responses()[k];
    const double precision = 1.0 / state.response_variances[static_cast<Eigen::Index>(k)];
    weights.push_back(precision);
    // z_k - V*_k beta*
    const Eigen::VectorXd residual =
        state.latent_responses[k] - spec_.source_mean(state, k) + block.residual_design * state.residual_field;
    linear += precision * (block.residual_design.transpose() *
                           block.inverse_variance_weights.cwiseProduct(residual));
  }
  weights.push_back(state.residual_kappa);
  residual_sampler_.set_weights(weights);
  return linear;
}

Eigen::VectorXd GibbsSampler::prepare_predictor_field(const ChainState& state, std::size_t j) {
  const auto jj = static_cast<Eigen::Index>(j);
  const double slope = state.coefficients[static_cast<Eigen::Index>(spec_.slope_column(j))];
  std::vector<double> weights;
  Eigen::VectorXd linear = Eigen::VectorXd::Zero(state.predictor_fields[j].size());
  for (std::size_t k = 0; k < spec_.num_responses(); ++k) {
    const ResponseBlock& block = spec_.responses()[k];
    const double precision = 1.0 / state.response_variances[static_cast<Eigen::Index>(k)];
    weights.push_back(slope * slope * precision);
    if (slope == 0.0) continue;
    // z_k - b_k - beta0 - sum_{q != j} beta_q B_q delta_q - B_w delta_w
    const Eigen::VectorXd residual = state.latent_responses[k] - spec_.source_mean(state, k) +
                                     slope * (block.predictor_designs[j] * state.predictor_fields[j]);
    linear += slope * precision *
              (block.predictor_designs[j].transpose() * block.inverse_variance_weights.cwiseProduct(residual));
  }
  const PredictorBlock& pred = spec_.predictors()[j];
  const double precision_x = 1.0 / state.predictor_variances[jj];
  weights.push_back(precision_x);
  const Eigen::VectorXd centred = as_vector(pred.source.values).array() - state.intercepts[jj];
  linear += precision_x * (pred.design.transpose() * pred.inverse_variance_weights.cwiseProduct(centred));
  weights.push_back(state.predictor_kappas[jj]);
  predictor_samplers_[j].set_weights(weights);
  return linear;
}

void GibbsSampler::step_residual_field(ChainState& state, Rng& rng) {
  const Eigen::VectorXd linear = prepare_residual_field(state);
  state.residual_field = residual_sampler_.draw(linear, rng);
}

void GibbsSampler::step_predictor_field(ChainState& state, Rng& rng, std::size_t j) {
  const Eigen::VectorXd linear = prepare_predictor_field(state, j);
  state.predictor_fields[j] = predictor_samplers_[j].draw(linear, rng);
}

GaussianMoments GibbsSampler::residual_field_moments(const ChainState& state) {
  const Eigen::VectorXd linear = prepare_residual_field(state);
  return {residual_sampler_.mean(linear), residual_sampler_.covariance()};
}

GaussianMoments GibbsSampler::predictor_field_moments(const ChainState& state, std::size_t j) {
  const Eigen::VectorXd linear = prepare_predictor_field(state, j);
  return {predictor_samplers_[j].mean(linear), predictor_samplers_[j].covariance()};
}

namespace {

struct CoefficientSystem {
  Eigen::MatrixXd precision;
  Eigen::VectorXd linear;
};

CoefficientSystem coefficient_system(const ModelSpec& spec, const ChainState& state) {
  const auto m = static_cast<Eigen::Index>(spec.num_coefficients());
  CoefficientSystem sys{Eigen::MatrixXd::Identity(m, m) / spec.config().coefficient_prior_variance,
                        Eigen::VectorXd::Zero(m)};
  for (std::size_t k = 0; k < spec.num_responses(); ++k) {
    const ResponseBlock& block = spec.responses()[k];
    const double precision = 1.0 / state.response_variances[static_cast<Eigen::Index>(k)];
    const Eigen::MatrixXd design = spec.coefficient_design(state, k);
    const Eigen::MatrixXd weighted = block.inverse_variance_weights.asDiagonal() * design;
    sys.precision += precision * design.transpose() * weighted;
    const Eigen::VectorXd residual = state.latent_responses[k] - block.residual_design * state.residual_field;
    sys.linear += precision * weighted.transpose() * residual;
  }
  return sys;
}

}  // namespace

GaussianMoments GibbsSampler::coefficient_moments(const ChainState& state) const {
  const CoefficientSystem sys = coefficient_system(spec_, state);
  Eigen::LLT<Eigen::MatrixXd> llt(sys.precision);
  if (llt.info() != Eigen::Success) throw NumericalError("coefficient precision is not positive definite");
  const auto m = sys.precision.rows();
  return {llt.solve(sys.linear), llt.solve(Eigen::MatrixXd::Identity(m, m))};
}

void GibbsSampler::step_coefficients(ChainState& state, Rng& rng) const {
  const CoefficientSystem sys = coefficient_system(spec_, state);
  Eigen::LLT<Eigen::MatrixXd> llt(sys.precision);
  if (llt.info() != Eigen::Success) throw NumericalError("coefficient precision is not positive definite");
  Eigen::VectorXd z(sys.precision.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  state.coefficients = llt.solve(sys.linear) + llt.matrixU().solve(z);
}

std::pair<double, double> GibbsSampler::intercept_moments(const ChainState& state, std::size_t j) const {
  const auto jj = static_cast<Eigen::Index>(j);
  const PredictorBlock& pred = spec_.predictors()[j];
  const double precision_x = 1.0 / state.predictor_variances[jj];
  const double precision = precision_x * pred.inverse_variance_weights.sum() +
                           1.0 / spec_.config().intercept_prior_variance;
  const Eigen::VectorXd residual = as_vector(pred.source.values) - pred.design * state.predictor_fields[j];
  const double linear = precision_x * pred.inverse_variance_weights.dot(residual);
  return {linear / precision, 1.0 / precision};
}

void GibbsSampler::step_intercept(ChainState& state, Rng& rng, std::size_t j) const {
  const auto [mean, variance] = intercept_moments(state, j);
  state.intercepts[static_cast<Eigen::Index>(j)] = rng.normal(mean, std::sqrt(variance));
}

std::pair<double, double> GibbsSampler::response_variance_posterior(const ChainState& state,
                                                                    std::size_t k) const {
  const ResponseBlock& block = spec_.responses()[k];
  const Eigen::VectorXd residual = state.latent_responses[k] - spec_.source_mean(state, k);
  const auto& prior = spec_.config().response_variance_prior;
  return {prior.shape + 0.5 * static_cast<double>(block.size()),
          prior.scale + 0.5 * residual.dot(block.inverse_variance_weights.cwiseProduct(residual))};
}

std::pair<double, double> GibbsSampler::predictor_variance_posterior(const ChainState& state,
                                                                     std::size_t j) const {
  const PredictorBlock& pred = spec_.predictors()[j];
  Eigen::VectorXd residual = as_vector(pred.source.values) - pred.design * state.predictor_fields[j];
  residual.array() -= state.intercepts[static_cast<Eigen::Index>(j)];
  const auto& prior = spec_.config().predictor_variance_prior;
  return {prior.shape + 0.5 * static_cast<double>(pred.size()),
          prior.scale + 0.5 * residual.dot(pred.inverse_variance_weights.cwiseProduct(residual))};
}

void GibbsSampler::step_variances(ChainState& state, Rng& rng) const {
  for (std::size_t k = 0; k < spec_.num_responses(); ++k) {
    const auto [shape, scale] = response_variance_posterior(state, k);
    state.response_variances[static_cast<Eigen::Index>(k)] = rng.inverse_gamma(shape, scale);
  }
  for (std::size_t j = 0; j < spec_.num_predictors(); ++j) {
    const auto [shape, scale] = predictor_variance_posterior(state, j);
    state.predictor_variances[static_cast<Eigen::Index>(j)] = rng.inverse_gamma(shape, scale);
  }
}

std::pair<double, double> GibbsSampler::predictor_kappa_posterior(const ChainState& state,
                                                                  std::size_t j) const {
  const GmrfPrior& prior = spec_.predictor_priors()[j];
  const auto& hyper = spec_.config().predictors[j].kappa_prior;
  return {hyper.shape + 0.5 * static_cast<double>(prior.rank()),
          hyper.rate + 0.5 * prior.quadratic_form(state.predictor_fields[j])};
}

std::pair<double, double> GibbsSampler::residual_kappa_posterior(const ChainState& state) const {
  const GmrfPrior& prior = spec_.residual_prior();
  const auto& hyper = spec_.config().residual.kappa_prior;
  return {hyper.shape + 0.5 * static_cast<double>(prior.rank()),
          hyper.rate + 0.5 * prior.quadratic_form(state.residual_field)};
}

void GibbsSampler::step_kappas(ChainState& state, Rng& rng) const {
  if (spec_.samples_residual_kappa()) {
    const auto [shape, rate] = residual_kappa_posterior(state);
    state.residual_kappa = rng.gamma(shape, rate);
  }
  for (std::size_t j = 0; j < spec_.num_predictors(); ++j) {
    if (!spec_.samples_predictor_kappa(j)) continue;
    const auto [shape, rate] = predictor_kappa_posterior(state, j);
    state.predictor_kappas[static_cast<Eigen::Index>(j)] = rng.gamma(shape, rate);
  }
}

void GibbsSampler::sweep(ChainState& state, Rng& rng) {
  step_z(state, rng);
  step_residual_field(state, rng);
  for (std::size_t j = 0; j < spec_.num_predictors(); ++j) step_predictor_field(state, rng, j);
  step_coefficients(state, rng);
  for (std::size_t j = 0; j < spec_.num_predictors(); ++j) step_intercept(state, rng, j);
  step_variances(state, rng);
  step_kappas(state, rng);
  ++state.iteration;
}

// ---------------------------------------------------------------------------
// Storage

ParameterLayout ParameterLayout::from_spec(const ModelSpec& spec) {
  ParameterLayout layout;
  auto& names = layout.names;
  layout.num_coefficients = spec.num_coefficients();
  layout.num_predictors = spec.num_predictors();
  layout.num_responses = spec.num_responses();
  layout.coefficients = names.size();
  for (const auto& n : spec.coefficient_names()) names.push_back(n);
  layout.intercepts = names.size();
  for (const auto& p : spec.predictors()) names.push_back("alpha[" + p.source.id + "]");
  layout.response_variances = names.size();
  for (const auto& r : spec.responses()) names.push_back("sigma2_y[" + r.source.id + "]");
  layout.predictor_variances = names.size();
  for (const auto& p : spec.predictors()) names.push_back("sigma2_x[" + p.source.id + "]");
  layout.residual_kappa = names.size();
  names.push_back("kappa_w");
  layout.predictor_kappas = names.size();
  for (const auto& p : spec.predictors()) names.push_back("kappa_v[" + p.source.id + "]");
  layout.residual_field = names.size();
  layout.residual_size = spec.config().residual.basis.size();
  for (std::size_t i = 0; i < layout.residual_size; ++i) names.push_back("delta_w[" + std::to_string(i) + "]");
  for (std::size_t j = 0; j < spec.num_predictors(); ++j) {
    layout.predictor_fields.push_back(names.size());
    layout.predictor_sizes.push_back(spec.config().predictors[j].basis.size());
    const std::string& id = spec.predictors()[j].source.id;
    for (std::size_t i = 0; i < layout.predictor_sizes.back(); ++i) {
      names.push_back("delta_v[" + id + "][" + std::to_string(i) + "]");
    }
  }
  return layout;
}

std::size_t ParameterLayout::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ValidationError("unknown parameter '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

void ParameterLayout::store(const ChainState& state, Eigen::Ref<Eigen::RowVectorXd> row) const {
  auto put = [&](std::size_t offset, const Eigen::VectorXd& v) {
    row.segment(static_cast<Eigen::Index>(offset), v.size()) = v.transpose();
  };
  put(coefficients, state.coefficients);
  put(intercepts, state.intercepts);
  put(response_variances, state.response_variances);
  put(predictor_variances, state.predictor_variances);
  row[static_cast<Eigen::Index>(residual_kappa)] = state.residual_kappa;
  put(predictor_kappas, state.predictor_kappas);
  put(residual_field, state.residual_field);
  for (std::size_t j = 0; j < predictor_fields.size(); ++j) put(predictor_fields[j], state.predictor_fields[j]);
}

LatentState ParameterLayout::latent(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  LatentState s;
  s.coefficients = row.segment(static_cast<Eigen::Index>(coefficients),
                               static_cast<Eigen::Index>(num_coefficients)).transpose();
  s.residual_field = row.segment(static_cast<Eigen::Index>(residual_field),
                                 static_cast<Eigen::Index>(residual_size)).transpose();
  for (std::size_t j = 0; j < predictor_fields.size(); ++j) {
    s.predictor_fields.push_back(row.segment(static_cast<Eigen::Index>(predictor_fields[j]),
                                             static_cast<Eigen::Index>(predictor_sizes[j])).transpose());
  }
  return s;
}

std::size_t PosteriorSamples::num_draws() const noexcept {
  std::size_t n = 0;
  for (const auto& c : chains) n += static_cast<std::size_t>(c.rows());
  return n;
}

DrawMatrix PosteriorSamples::stacked() const {
  DrawMatrix all(static_cast<Eigen::Index>(num_draws()), static_cast<Eigen::Index>(layout.size()));
  Eigen::Index row = 0;
  for (const auto& c : chains) {
    all.middleRows(row, c.rows()) = c;
    row += c.rows();
  }
  return all;
}

Eigen::VectorXd PosteriorSamples::column(std::size_t parameter) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(num_draws()));
  Eigen::Index row = 0;
  for (const auto& c : chains) {
    out.segment(row, c.rows()) = c.col(static_cast<Eigen::Index>(parameter));
    row += c.rows();
  }
  return out;
}

DrawMatrix run_chain(const ModelSpec& spec, const SamplerConfig& config, ChainState state, Rng& rng) {
  const ParameterLayout layout = ParameterLayout::from_spec(spec);
  GibbsSampler sampler(spec);
  DrawMatrix draws(static_cast<Eigen::Index>(config.draws_per_chain()), static_cast<Eigen::Index>(layout.size()));
  Eigen::Index stored = 0;
  for (int it = 1; it <= config.n_iter; ++it) {
    try {
      sampler.sweep(state, rng);
    } catch (const NumericalError& e) {
      throw NumericalError("iteration " + std::to_string(it) + ": " + e.what());
    }
    if (it > config.burn_in && (it - config.burn_in) % config.thin == 0 && stored < draws.rows()) {
      layout.store(state, draws.row(stored++));
    }
  }
  return draws;
}

PosteriorSamples run(const ModelSpec& spec, const SamplerConfig& config) {
  config.validate();
  PosteriorSamples samples{ParameterLayout::from_spec(spec), {}, config};
  samples.chains.resize(static_cast<std::size_t>(config.n_chains));
  std::vector<std::exception_ptr> errors(samples.chains.size());
  auto work = [&](std::size_t c) {
    try {
      Rng rng(derive_seed(config.seed, c));
      samples.chains[c] = run_chain(spec, config, initial_state(spec), rng);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  const auto n = samples.chains.size();
  const auto width = static_cast<std::size_t>(std::max(1, config.threads));
  for (std::size_t start = 0; start < n; start += width) {
    const std::size_t stop = std::min(n, start + width);
    if (stop - start == 1) {
      work(start);
      continue;
    }
    std::vector<std::thread> pool;
    for (std::size_t c = start; c < stop; ++c) pool.emplace_back(work, c);
    for (auto& t : pool) t.join();
  }
  for (std::size_t c = 0; c < n; ++c) {
    if (errors[c]) {
      try {
        std::rethrow_exception(errors[c]);
      } catch (const NumericalError& e) {
        throw NumericalError("chain " + std::to_string(c) + ", " + e.what());
      }
    }
  }
  return samples;
}

}  // namespace splinecos
