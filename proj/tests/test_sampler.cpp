#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "oracles.hpp"
#include "splinecos/error.hpp"
#include "splinecos/sampler.hpp"

using namespace splinecos;

namespace {

ModelConfig small_config() {
  ModelConfig config;
  config.residual.basis = make_tensor_basis(0, 4, 0, 4, 3, 3, 2);
  FieldConfig pred;
  pred.basis = make_tensor_basis(0, 4, 0, 4, 3, 3, 2);
  config.predictors.push_back(pred);
  return config;
}

std::vector<ResponseSource> responses() {
  ResponseSource a;
  a.id = "survey";
  a.reliable = true;
  a.variance = VarianceFunction::InverseArea;
  a.supports = {SupportGeometry::rect(0, 2, 0, 2), SupportGeometry::rect(1.5, 4, 0.5, 3),
                SupportGeometry::rect(0, 4, 3, 4), SupportGeometry::rect(2, 4, 0, 1)};
  a.values = {0.1, -0.4, 1.2, 0.3};
  ResponseSource b;
  b.id = "admin";
  b.supports = {SupportGeometry::point(0.3, 0.7), SupportGeometry::point(3.9, 2.2),
                SupportGeometry::point(1.0, 3.5)};
  b.values = {0.0, 2.0, -1.0};
  return {a, b};
}

std::vector<PredictorSource> predictors() {
  PredictorSource p;
  p.id = "cov";
  p.supports = {SupportGeometry::rect(0, 2, 0, 4), SupportGeometry::rect(2, 4, 0, 4),
                SupportGeometry::point(1.0, 1.0)};
  p.values = {1.0, 3.0, 0.5};
  return {p};
}

Eigen::VectorXd ramp(Eigen::Index n, double scale, double phase) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * std::sin(1.3 * static_cast<double>(i) + phase);
  return v;
}

ChainState busy_state(const ModelSpec& spec) {
  ChainState s = initial_state(spec);
  s.coefficients = Eigen::Vector3d(0.4, -0.3, 1.7);
  s.residual_field = ramp(9, 0.8, 0.1);
  s.predictor_fields[0] = ramp(9, -1.1, 0.7);
  s.intercepts[0] = 0.25;
  s.response_variances << 0.6, 1.4;
  s.predictor_variances[0] = 0.8;
  s.residual_kappa = 2.5;
  s.predictor_kappas[0] = 0.7;
  return s;
}

Eigen::VectorXd values(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Gaussian with precision q and linear term b, optionally restricted to
// sum(x) = 0 by reparametrizing x = H theta with H an orthonormal basis of
// the complement of the ones vector.
GaussianMoments dense_conditional(const Eigen::MatrixXd& q, const Eigen::VectorXd& b, bool zero_sum) {
  const Eigen::Index n = q.rows();
  if (!zero_sum) {
    const Eigen::MatrixXd cov = q.inverse();
    return {cov * b, cov};
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  m.col(0).setOnes();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  const Eigen::MatrixXd full = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd h = full.rightCols(n - 1);
  const Eigen::MatrixXd inner = (h.transpose() * q * h).inverse();
  return {h * inner * h.transpose() * b, h * inner * h.transpose()};
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("field conditionals against dense oracles") {
  for (bool centred : {true, false}) {
    auto config = small_config();
    config.center_fields = centred;
    const ModelSpec spec = ModelSpec::build(config, responses(), predictors());
    GibbsSampler sampler(spec);
    const ChainState s = busy_state(spec);
    const double beta0 = 0.4, bias = -0.3, slope = 1.7;

    // Residual field.
    Eigen::MatrixXd q = s.residual_kappa * Eigen::MatrixXd(spec.residual_prior().structure());
    Eigen::VectorXd b = Eigen::VectorXd::Zero(9);
    for (std::size_t k = 0; k < 2; ++k) {
      const auto& block = spec.responses()[k];
      const Eigen::MatrixXd bw(block.residual_design);
      const Eigen::MatrixXd bv(block.predictor_designs[0]);
      const Eigen::MatrixXd w = block.inverse_variance_weights.asDiagonal();
      const double s2 = s.response_variances[static_cast<Eigen::Index>(k)];
      Eigen::VectorXd r = values(block.source.values).array() - beta0 - (k == 1 ? bias : 0.0);
      r -= slope * bv * s.predictor_fields[0];
      q += bw.transpose() * w * bw / s2;
      b += bw.transpose() * w * r / s2;
    }
    const auto oracle_w = dense_conditional(q, b, centred);
    const auto moments_w = sampler.residual_field_moments(s);
    CHECK(max_abs(moments_w.mean - oracle_w.mean) < 1e-10);
    CHECK(max_abs(moments_w.covariance - oracle_w.covariance) < 1e-10);
    const Eigen::MatrixXd assembled(sampler.residual_precision());
    const Eigen::MatrixXd plain = q;
    CHECK(max_abs(assembled - plain) < 1e-12);
    CHECK(max_abs(assembled - assembled.transpose()) == 0.0);

    // Predictor field.
    q = s.predictor_kappas[0] * Eigen::MatrixXd(spec.predictor_priors()[0].structure());
    b = Eigen::VectorXd::Zero(9);
    for (std::size_t k = 0; k < 2; ++k) {
      const auto& block = spec.responses()[k];
      const Eigen::MatrixXd bw(block.residual_design);
      const Eigen::MatrixXd bv(block.predictor_designs[0]);
      const Eigen::MatrixXd w = block.inverse_variance_weights.asDiagonal();
      const double s2 = s.response_variances[static_cast<Eigen::Index>(k)];
      Eigen::VectorXd r = values(block.source.values).array() - beta0 - (k == 1 ? bias : 0.0);
      r -= bw * s.residual_field;
      q += slope * slope * bv.transpose() * w * bv / s2;
      b += slope * bv.transpose() * w * r / s2;
    }
    const auto& pred = spec.predictors()[0];
    const Eigen::MatrixXd bx(pred.design);
    const Eigen::VectorXd centred_x = values(pred.source.values).array() - s.intercepts[0];
    q += bx.transpose() * bx / s.predictor_variances[0];
    b += bx.transpose() * centred_x / s.predictor_variances[0];
    const auto oracle_v = dense_conditional(q, b, centred);
    const auto moments_v = sampler.predictor_field_moments(s, 0);
    CHECK(max_abs(moments_v.mean - oracle_v.mean) < 1e-10);
    CHECK(max_abs(moments_v.covariance - oracle_v.covariance) < 1e-10);
    if (centred) {
      CHECK(std::abs(moments_v.mean.sum()) < 1e-10);
      CHECK(max_abs(moments_v.covariance * Eigen::VectorXd::Ones(9)) < 1e-10);
    }
  }
}

TEST_CASE("scalar and coefficient conditionals against dense oracles") {
  const ModelSpec spec = ModelSpec::build(small_config(), responses(), predictors());
  GibbsSampler sampler(spec);
  const ChainState s = busy_state(spec);

  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(3, 3) / 100.0;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(3);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& block = spec.responses()[k];
    const Eigen::Index n = static_cast<Eigen::Index>(block.size());
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, 3);
    x.col(0).setOnes();
    if (k == 1) x.col(1).setOnes();
    x.col(2) = Eigen::MatrixXd(block.predictor_designs[0]) * s.predictor_fields[0];
    const Eigen::MatrixXd w = block.inverse_variance_weights.asDiagonal();
    const Eigen::VectorXd r = values(block.source.values) - Eigen::MatrixXd(block.residual_design) * s.residual_field;
    const double s2 = s.response_variances[static_cast<Eigen::Index>(k)];
    q += x.transpose() * w * x / s2;
    b += x.transpose() * w * r / s2;
  }
  const Eigen::MatrixXd cov = q.inverse();
  const auto coef = sampler.coefficient_moments(s);
  CHECK(max_abs(coef.mean - cov * b) < 1e-10);
  CHECK(max_abs(coef.covariance - cov) < 1e-10);

  // Intercept.
  const auto& pred = spec.predictors()[0];
  const Eigen::VectorXd rx = values(pred.source.values) - Eigen::MatrixXd(pred.design) * s.predictor_fields[0];
  const double prec = 3.0 / 0.8 + 1.0 / 100.0;
  const auto [amean, avar] = sampler.intercept_moments(s, 0);
  CHECK(std::abs(avar - 1.0 / prec) < 1e-12);
  CHECK(std::abs(amean - rx.sum() / 0.8 / prec) < 1e-12);

  // Variances.
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& block = spec.responses()[k];
    Eigen::VectorXd r = values(block.source.values) - Eigen::MatrixXd(block.residual_design) * s.residual_field;
    r -= 1.7 * (Eigen::MatrixXd(block.predictor_designs[0]) * s.predictor_fields[0]);
    r.array() -= 0.4 + (k == 1 ? -0.3 : 0.0);
    double ss = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      const double d = k == 0 ? 1.0 / block.source.supports[static_cast<std::size_t>(i)].area() : 1.0;
      ss += r[i] * r[i] / d;
    }
    const auto [shape, scale] = sampler.response_variance_posterior(s, k);
    CHECK(shape == doctest::Approx(0.01 + 0.5 * static_cast<double>(r.size())).epsilon(1e-14));
    CHECK(std::abs(scale - (0.01 + 0.5 * ss)) < 1e-12);
  }
  const auto [xshape, xscale] = sampler.predictor_variance_posterior(s, 0);
  CHECK(xshape == doctest::Approx(0.01 + 1.5));
  CHECK(std::abs(xscale - (0.01 + 0.5 * (rx.array() - 0.25).square().sum())) < 1e-12);

  // Scales.
  const Eigen::MatrixXd pw(spec.residual_prior().structure());
  const auto [wshape, wrate] = sampler.residual_kappa_posterior(s);
  CHECK(wshape == doctest::Approx(0.01 + 4.0));
  CHECK(std::abs(wrate - (0.01 + 0.5 * s.residual_field.dot(pw * s.residual_field))) < 1e-12);
  const Eigen::MatrixXd pv = structure_matrix_grid(3, 3);
  const auto [vshape, vrate] = sampler.predictor_kappa_posterior(s, 0);
  CHECK(vshape == doctest::Approx(0.01 + 4.0));
  CHECK(std::abs(vrate - (0.01 + 0.5 * s.predictor_fields[0].dot(pv * s.predictor_fields[0]))) < 1e-12);
}

TEST_CASE("field draws match the conditional distribution") {
  const ModelSpec spec = ModelSpec::build(small_config(), responses(), predictors());
  GibbsSampler sampler(spec);
  ChainState s = busy_state(spec);
  const auto moments = sampler.residual_field_moments(s);
  const Eigen::VectorXd a = ramp(9, 1.0, 2.0);
  const double mean = a.dot(moments.mean);
  const double sd = std::sqrt(a.dot(moments.covariance * a));
  Rng rng(17);
  const int n = 100000;
  std::vector<double> proj(n);
  double worst_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    sampler.step_residual_field(s, rng);
    proj[static_cast<std::size_t>(i)] = a.dot(s.residual_field);
    worst_sum = std::max(worst_sum, std::abs(s.residual_field.sum()));
  }
  CHECK(worst_sum < 1e-10);
  const double p = oracle::ks_test(proj, [&](double x) { return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0))); });
  CHECK(p > 0.001);

  const auto coef = sampler.coefficient_moments(s);
  std::vector<double> slopes(n);
  for (int i = 0; i < n; ++i) {
    sampler.step_coefficients(s, rng);
    slopes[static_cast<std::size_t>(i)] = s.coefficients[2];
  }
  const double cm = coef.mean[2];
  const double cs = std::sqrt(coef.covariance(2, 2));
  CHECK(oracle::ks_test(slopes, [&](double x) { return 0.5 * std::erfc(-(x - cm) / (cs * std::sqrt(2.0))); }) >
        0.001);
}

TEST_CASE("truncated normal draws") {
  Rng rng(99);
  const int n = 100000;
  auto phi = [](double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); };
  for (double lower : {-5.0, -1.0, 0.0, 2.0, 5.0}) {
    std::vector<double> d(n);
    for (int i = 0; i < n; ++i) {
      d[static_cast<std::size_t>(i)] = truncated_normal_above(rng, 0.0, 1.0, lower);
      REQUIRE(d[static_cast<std::size_t>(i)] > lower);
    }
    const double tail = 1.0 - phi(lower);
    const double p = oracle::ks_test(d, [&](double x) { return (phi(x) - phi(lower)) / tail; });
    CHECK_MESSAGE(p > 0.001, "lower bound " << lower);
  }
  for (double upper : {-4.5, 0.5, 3.0}) {
    std::vector<double> d(n);
    for (int i = 0; i < n; ++i) {
      d[static_cast<std::size_t>(i)] = truncated_normal_below(rng, 1.0, 2.0, upper);
      REQUIRE(d[static_cast<std::size_t>(i)] <= upper);
    }
    const double mass = phi((upper - 1.0) / 2.0);
    const double p = oracle::ks_test(d, [&](double x) { return phi((x - 1.0) / 2.0) / mass; });
    CHECK_MESSAGE(p > 0.001, "upper bound " << upper);
  }

  // Half-normal mean sqrt(2/pi).
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += truncated_normal_above(rng, 0.0, 1.0, 0.0);
  CHECK(std::abs(sum / n - 0.7979) < 0.01);

  // A label of 0 with a latent mean of 8 sits eight standard deviations out.
  for (int i = 0; i < 1000; ++i) {
    const double z = truncated_normal_below(rng, 8.0, 1.0, 0.0);
    REQUIRE(std::isfinite(z));
    REQUIRE(z <= 0.0);
  }
  for (int i = 0; i < 1000; ++i) {
    const double z = truncated_normal_above(rng, -8.0, 1.0, 0.0);
    REQUIRE(std::isfinite(z));
    REQUIRE(z > 0.0);
  }
}

TEST_CASE("probit latent responses follow the labels") {
  auto config = small_config();
  config.residual.treatment = KappaTreatment::Fixed;
  auto r = responses();
  r[1].family = Family::BernoulliProbit;
  r[1].values = {1.0, 0.0, 1.0};
  const ModelSpec spec = ModelSpec::build(config, r, predictors());
  GibbsSampler sampler(spec);
  ChainState s = initial_state(spec);
  Rng rng(5);
  for (int it = 0; it < 200; ++it) {
    sampler.sweep(s, rng);
    const Eigen::VectorXd& z = s.latent_responses[1];
    REQUIRE(z[0] > 0.0);
    REQUIRE(z[1] <= 0.0);
    REQUIRE(z[2] > 0.0);
    REQUIRE(s.residual_kappa == 1.0);
  }
  CHECK(s.iteration == 200);
}

TEST_CASE("runs are deterministic and independent of thread count") {
  const ModelSpec spec = ModelSpec::build(small_config(), responses(), predictors());
  SamplerConfig cfg;
  cfg.n_iter = 300;
  cfg.burn_in = 100;
  cfg.thin = 2;
  cfg.n_chains = 3;
  cfg.seed = 11;
  const PosteriorSamples a = run(spec, cfg);
  cfg.threads = 3;
  const PosteriorSamples b = run(spec, cfg);
  REQUIRE(a.chains.size() == 3);
  CHECK(a.chains[0].rows() == 100);
  CHECK(a.num_draws() == 300);
  for (std::size_t c = 0; c < 3; ++c) CHECK((a.chains[c].array() == b.chains[c].array()).all());
  CHECK_FALSE((a.chains[0].array() == a.chains[1].array()).all());
  cfg.seed = 12;
  const PosteriorSamples other = run(spec, cfg);
  CHECK_FALSE((a.chains[0].array() == other.chains[0].array()).all());

  const auto& layout = a.layout;
  CHECK(layout.size() == 3 + 1 + 2 + 1 + 1 + 1 + 9 + 9);
  CHECK(layout.index_of("beta[cov]") == 2);
  CHECK(layout.index_of("alpha[cov]") == 3);
  CHECK(layout.index_of("sigma2_y[admin]") == 5);
  CHECK(layout.index_of("kappa_w") == 7);
  CHECK(layout.index_of("delta_w[0]") == 9);
  CHECK(layout.index_of("delta_v[cov][8]") == 26);
  CHECK_THROWS_AS(layout.index_of("nope"), ValidationError);
  const LatentState latent = layout.latent(a.chains[0].row(5));
  CHECK(latent.coefficients[2] == a.chains[0](5, 2));
  CHECK(latent.predictor_fields[0][8] == a.chains[0](5, 26));
  CHECK(a.stacked().rows() == 300);
  CHECK(a.column(2)[150] == a.chains[1](50, 2));
}

TEST_CASE("sampler configuration validation") {
  SamplerConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.draws_per_chain() == 1600);
  cfg.burn_in = cfg.n_iter;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = SamplerConfig{};
  cfg.thin = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = SamplerConfig{};
  cfg.n_chains = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}
