#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "splinecos/diagnostics.hpp"
#include "splinecos/error.hpp"
#include "splinecos/predict.hpp"

using namespace splinecos;

namespace {

ModelSpec small_spec() {
  ModelConfig config;
  config.residual.basis = make_tensor_basis(0, 4, 0, 4, 4, 4, 3);
  FieldConfig pred;
  pred.basis = make_tensor_basis(0, 4, 0, 4, 3, 3, 2);
  config.predictors = {pred, pred};
  ResponseSource a;
  a.id = "survey";
  a.reliable = true;
  ResponseSource b;
  b.id = "admin";
  PredictorSource x1;
  x1.id = "x1";
  PredictorSource x2;
  x2.id = "x2";
  Rng rng(3);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      a.supports.push_back(SupportGeometry::rect(i, i + 1, j, j + 1));
      a.values.push_back(std::sin(i + 0.5) + 0.3 * j + 0.1 * rng.normal());
      b.supports.push_back(SupportGeometry::point(i + 0.3, j + 0.6));
      b.values.push_back(std::sin(i + 0.3) + 0.3 * j + 0.5 + 0.1 * rng.normal());
      x1.supports.push_back(SupportGeometry::point(i + 0.5, j + 0.5));
      x1.values.push_back(0.2 * i + 0.1 * rng.normal());
    }
  }
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      x2.supports.push_back(SupportGeometry::rect(2 * i, 2 * i + 2, 2 * j, 2 * j + 2));
      x2.values.push_back(0.5 * j - 0.2 * i + 0.1 * rng.normal());
    }
  }
  return ModelSpec::build(config, {a, b}, {x1, x2});
}

PosteriorSamples short_run(const ModelSpec& spec, int chains = 2) {
  SamplerConfig cfg;
  cfg.n_iter = 400;
  cfg.burn_in = 100;
  cfg.thin = 3;
  cfg.n_chains = chains;
  cfg.seed = 21;
  return run(spec, cfg);
}

}  // namespace

TEST_CASE("prediction identities per draw") {
  const ModelSpec spec = small_spec();
  const PosteriorSamples samples = short_run(spec);
  const DrawMatrix draws = samples.stacked();
  REQUIRE(draws.rows() == 200);

  // Training supports reproduce the sampler's latent mean.
  const auto& survey = spec.responses()[0].source.supports;
  const Eigen::MatrixXd eta = predict_eta(samples, spec, survey);
  double worst = 0.0;
  for (Eigen::Index d = 0; d < draws.rows(); ++d) {
    const LatentState state = samples.layout.latent(draws.row(d));
    worst = std::max(worst, (eta.row(d).transpose() - spec.source_mean(state, 0)).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-12);

  // Rectangle = area-weighted mean of its quadrants.
  const std::vector<SupportGeometry> parent{SupportGeometry::rect(0.5, 3.5, 1.0, 3.0)};
  const std::vector<SupportGeometry> quads{
      SupportGeometry::rect(0.5, 2.0, 1.0, 2.0), SupportGeometry::rect(0.5, 2.0, 2.0, 3.0),
      SupportGeometry::rect(2.0, 3.5, 1.0, 2.0), SupportGeometry::rect(2.0, 3.5, 2.0, 3.0)};
  const Eigen::MatrixXd whole = predict_eta(samples, spec, parent);
  const Eigen::MatrixXd parts = predict_eta(samples, spec, quads);
  CHECK((whole.col(0) - parts.rowwise().mean()).cwiseAbs().maxCoeff() < 1e-12);

  // W + LS + beta0 = eta.
  const std::vector<SupportGeometry> targets{SupportGeometry::point(0.1, 3.9), SupportGeometry::rect(1, 2.5, 0, 4),
                                             SupportGeometry::point(4, 4)};
  const Eigen::MatrixXd e = predict_eta(samples, spec, targets);
  const Eigen::MatrixXd w = predict_field(samples, spec, targets, {FieldKind::Residual, 0});
  const Eigen::MatrixXd ls = predict_field(samples, spec, targets, {FieldKind::Suitability, 0});
  Eigen::MatrixXd sum = w + ls;
  sum.colwise() += draws.col(0).eval();
  CHECK((sum - e).cwiseAbs().maxCoeff() < 1e-12);

  // LS = sum_j beta_j V_j.
  const Eigen::MatrixXd v1 = predict_field(samples, spec, targets, {FieldKind::Predictor, 0});
  const Eigen::MatrixXd v2 = predict_field(samples, spec, targets, {FieldKind::Predictor, 1});
  const Eigen::MatrixXd recombined = draws.col(2).asDiagonal() * v1 + draws.col(3).asDiagonal() * v2;
  CHECK((recombined - ls).cwiseAbs().maxCoeff() < 1e-12);

  // W and V_j are linear in the draws: the prediction of the averaged draw
  // is the average prediction. eta is bilinear in (beta, delta_v).
  PosteriorSamples pair{samples.layout, {DrawMatrix(draws.topRows(2))}, samples.config};
  PosteriorSamples avg{samples.layout, {DrawMatrix(draws.topRows(2).colwise().mean())}, samples.config};
  for (FieldRequest f : {FieldRequest{FieldKind::Residual, 0}, FieldRequest{FieldKind::Predictor, 1}}) {
    const Eigen::MatrixXd two = predict_field(pair, spec, targets, f);
    const Eigen::MatrixXd one = predict_field(avg, spec, targets, f);
    CHECK((one.row(0) - two.colwise().mean()).cwiseAbs().maxCoeff() < 1e-12);
  }

  // Zero slopes silence the suitability field.
  DrawMatrix zeroed = draws.topRows(3);
  zeroed.col(2).setZero();
  zeroed.col(3).setZero();
  PosteriorSamples flat{samples.layout, {zeroed}, samples.config};
  CHECK(predict_field(flat, spec, targets, {FieldKind::Suitability, 0}).cwiseAbs().maxCoeff() == 0.0);

  const std::vector<SupportGeometry> outside{SupportGeometry::rect(3, 5, 0, 1)};
  CHECK_THROWS_AS(predict_eta(samples, spec, outside), ValidationError);
}

TEST_CASE("blocked summaries agree with direct prediction") {
  const ModelSpec spec = small_spec();
  const PosteriorSamples samples = short_run(spec);
  std::vector<SupportGeometry> grid;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) grid.push_back(SupportGeometry::rect(0.4 * i, 0.4 * i + 0.4, 0.4 * j, 0.4 * j + 0.4));
  }
  const Eigen::MatrixXd direct = predict_eta(samples, spec, grid);
  const auto expected = summarize_columns(direct);
  Eigen::VectorXd truth = direct.colwise().mean().transpose();
  truth[0] = -1e9;
  truth[1] = 1e9;
  const PredictionTable table = predict_summaries(samples, spec, grid, {}, &truth, 3, 7);
  REQUIRE(table.summaries.size() == 100);
  for (std::size_t i = 0; i < 100; ++i) {
    CHECK(table.summaries[i].mean == expected[i].mean);
    CHECK(table.summaries[i].q975 == expected[i].q975);
  }
  REQUIRE(table.overprediction.has_value());
  const Eigen::VectorXd& p = *table.overprediction;
  CHECK(p[0] == 1.0);
  CHECK(p[1] == 0.0);
  CHECK((p.array() >= 0.0).all());
  CHECK((p.array() <= 1.0).all());
  CHECK((p - prob_overprediction(direct, truth)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(parse_field("V[x2]", spec).predictor == 1);
  CHECK(parse_field("V1", spec).kind == FieldKind::Predictor);
  CHECK_THROWS_AS(parse_field("bogus", spec), ValidationError);
}

TEST_CASE("overprediction probability") {
  Eigen::MatrixXd draws(5, 2);
  draws << 1, 10, 2, 20, 3, 30, 4, 40, 5, 50;
  const Eigen::VectorXd median = Eigen::Vector2d(3, 30);
  const Eigen::VectorXd p = prob_overprediction(draws, median);
  CHECK(p[0] == doctest::Approx(0.4));
  CHECK(p[1] == doctest::Approx(0.4));
  // Antitone in the truth.
  double last = 1.0;
  for (double t = 0.0; t <= 6.0; t += 0.25) {
    const double v = prob_overprediction(draws, Eigen::Vector2d(t, 0.0))[0];
    CHECK(v <= last);
    last = v;
  }
  CHECK(prob_overprediction(draws, Eigen::Vector2d(-1e300, -1e300)).isOnes());
  CHECK_THROWS_AS(prob_overprediction(draws, Eigen::Vector3d(1, 2, 3)), ValidationError);

  Rng rng(8);
  Eigen::MatrixXd many(2001, 1);
  for (Eigen::Index i = 0; i < many.rows(); ++i) many(i, 0) = rng.normal();
  std::vector<double> col(many.data(), many.data() + many.rows());
  const double med = summarize(col).q50;
  CHECK(prob_overprediction(many, Eigen::VectorXd::Constant(1, med))[0] == doctest::Approx(1000.0 / 2001.0));
}

TEST_CASE("summaries and quantile rule") {
  std::vector<double> seq(100);
  for (int i = 0; i < 100; ++i) seq[static_cast<std::size_t>(i)] = i + 1;
  const Summary s = summarize(seq);
  CHECK(s.q025 == doctest::Approx(3.475).epsilon(1e-14));
  CHECK(s.q975 == doctest::Approx(97.525).epsilon(1e-14));
  CHECK(s.q50 == doctest::Approx(50.5));
  CHECK(s.mean == doctest::Approx(50.5));
  CHECK(s.sd == doctest::Approx(std::sqrt(100.0 * 101.0 / 12.0)));

  const std::vector<double> constant(50, 2.5);
  const Summary c = summarize(constant);
  CHECK(c.sd == 0.0);
  CHECK(c.q025 == 2.5);
  CHECK(c.q975 == 2.5);
  CHECK_THROWS_AS(summarize(std::vector<double>{}), ValidationError);
}

TEST_CASE("success probability for a probit source") {
  ModelConfig config;
  config.residual.basis = make_line_basis(0, 10, 6, 3);
  config.residual.treatment = KappaTreatment::UnitVariance;
  ResponseSource a;
  a.id = "a";
  a.reliable = true;
  a.family = Family::BernoulliProbit;
  ResponseSource b = a;
  b.id = "b";
  b.reliable = false;
  for (int i = 0; i < 10; ++i) {
    a.supports.push_back(SupportGeometry::rect(i, i + 1, 0, 1));
    a.values.push_back(i < 5 ? 1.0 : 0.0);
    b.supports.push_back(SupportGeometry::point(i + 0.5, 0.5));
    b.values.push_back(i % 3 == 0 ? 1.0 : 0.0);
  }
  const ModelSpec spec = ModelSpec::build(config, {a, b}, {});
  const PosteriorSamples samples = short_run(spec, 1);
  const std::vector<SupportGeometry> targets{SupportGeometry::point(1, 0.5), SupportGeometry::rect(4, 8, 0, 1)};
  const Eigen::MatrixXd eta = predict_eta(samples, spec, targets);
  const DrawMatrix draws = samples.stacked();
  for (std::size_t k = 0; k < 2; ++k) {
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(2);
    for (Eigen::Index d = 0; d < draws.rows(); ++d) {
      const double shift = k == 1 ? draws(d, 1) : 0.0;
      const double sd = std::sqrt(draws(d, static_cast<Eigen::Index>(samples.layout.response_variances + k)));
      for (Eigen::Index j = 0; j < 2; ++j) expected[j] += 0.5 * std::erfc(-(eta(d, j) + shift) / sd / std::sqrt(2.0));
    }
    expected /= static_cast<double>(draws.rows());
    CHECK((success_probability(samples, spec, targets, k) - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("effective sample size and split R-hat") {
  Rng rng(314);
  const int n = 4000;
  Eigen::VectorXd iid(n);
  for (int i = 0; i < n; ++i) iid[i] = rng.normal();
  const double ess = effective_sample_size({iid});
  CHECK(std::abs(ess / n - 1.0) < 0.15);

  // AR(1) with phi = 0.8: ESS ~ n (1 - phi) / (1 + phi).
  std::vector<Eigen::VectorXd> ar(4, Eigen::VectorXd(n));
  for (auto& c : ar) {
    double x = rng.normal() / std::sqrt(1 - 0.64);
    for (int i = 0; i < n; ++i) {
      x = 0.8 * x + rng.normal();
      c[i] = x;
    }
  }
  const double expected = 4.0 * n * 0.2 / 1.8;
  CHECK(std::abs(effective_sample_size(ar) / expected - 1.0) < 0.2);
  CHECK(split_rhat(ar) < 1.01);

  // Chains stuck at different levels.
  std::vector<Eigen::VectorXd> apart{iid, iid.array() + 3.0};
  CHECK(split_rhat(apart) > 1.5);

  const Eigen::VectorXd constant = Eigen::VectorXd::Constant(100, 1.25);
  CHECK(split_rhat({constant, constant, constant}) == 1.0);
  CHECK(effective_sample_size({constant, constant}) == 200.0);
  CHECK_THROWS_AS(split_rhat({iid}), ValidationError);

  const ModelSpec spec = small_spec();
  const auto single = diagnose(short_run(spec, 1));
  CHECK_FALSE(single.front().rhat.has_value());
  const auto multi = diagnose(short_run(spec, 2));
  REQUIRE(multi.front().rhat.has_value());
  CHECK(multi.front().name == "beta0");
  CHECK(std::isfinite(*multi.front().rhat));
}
