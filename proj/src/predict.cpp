#include "splinecos/predict.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "splinecos/error.hpp"
#include "splinecos/random.hpp"

namespace splinecos {

namespace {

// draws.middleCols(offset, q) * B', computed as (B * block')'.
Eigen::MatrixXd field_product(const DrawMatrix& draws, std::size_t offset, const DesignMatrix& design) {
  const auto q = design.cols();
  const Eigen::MatrixXd block = draws.middleCols(static_cast<Eigen::Index>(offset), q).transpose();
  const Eigen::MatrixXd out = design * block;
  return out.transpose();
}

DesignMatrix checked_targets(const TensorBasis& basis, std::span<const SupportGeometry> targets) {
  try {
    return design_matrix(basis, targets);
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("prediction target: ") + e.what());
  }
}

Eigen::MatrixXd predict_stacked(const DrawMatrix& draws, const ParameterLayout& layout, const ModelSpec& spec,
                                std::span<const SupportGeometry> targets, FieldRequest field) {
  const auto n = static_cast<Eigen::Index>(targets.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(draws.rows(), n);
  const ModelConfig& cfg = spec.config();
  if (field.kind == FieldKind::Predictor) {
    if (field.predictor >= spec.num_predictors()) throw ValidationError("predictor index out of range");
    const DesignMatrix b = checked_targets(cfg.predictors[field.predictor].basis, targets);
    return field_product(draws, layout.predictor_fields[field.predictor], b);
  }
  if (field.kind == FieldKind::Eta || field.kind == FieldKind::Residual) {
    const DesignMatrix b = checked_targets(cfg.residual.basis, targets);
    out += field_product(draws, layout.residual_field, b);
  }
  if (field.kind == FieldKind::Eta) {
    out.colwise() += draws.col(static_cast<Eigen::Index>(layout.coefficients)).eval();
  }
  if (field.kind == FieldKind::Eta || field.kind == FieldKind::Suitability) {
    for (std::size_t j = 0; j < spec.num_predictors(); ++j) {
      const DesignMatrix b = checked_targets(cfg.predictors[j].basis, targets);
      const Eigen::VectorXd slope = draws.col(static_cast<Eigen::Index>(layout.coefficients + spec.slope_column(j)));
      out += slope.asDiagonal() * field_product(draws, layout.predictor_fields[j], b);
    }
  }
  return out;
}

}  // namespace

Eigen::MatrixXd predict_field(const PosteriorSamples& samples, const ModelSpec& spec,
                              std::span<const SupportGeometry> targets, FieldRequest field) {
  return predict_stacked(samples.stacked(), samples.layout, spec, targets, field);
}

Eigen::VectorXd prob_overprediction(const Eigen::MatrixXd& draws, const Eigen::VectorXd& truth) {
  if (truth.size() != draws.cols()) {
    throw ValidationError("truth has " + std::to_string(truth.size()) + " values for " +
                          std::to_string(draws.cols()) + " targets");
  }
  if (draws.rows() == 0) throw ValidationError("no posterior draws");
  Eigen::VectorXd p(draws.cols());
  for (Eigen::Index j = 0; j < draws.cols(); ++j) {
    p[j] = static_cast<double>((draws.col(j).array() > truth[j]).count()) / static_cast<double>(draws.rows());
  }
  return p;
}

Eigen::VectorXd success_probability(const PosteriorSamples& samples, const ModelSpec& spec,
                                    std::span<const SupportGeometry> targets, std::size_t source) {
  if (source >= spec.num_responses()) throw ValidationError("response source index out of range");
  const DrawMatrix draws = samples.stacked();
  const Eigen::MatrixXd eta = predict_stacked(draws, samples.layout, spec, targets, {});
  const int bias = spec.responses()[source].bias_column;
  const auto var_col = static_cast<Eigen::Index>(samples.layout.response_variances + source);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(eta.cols());
  for (Eigen::Index d = 0; d < eta.rows(); ++d) {
    const double shift = bias >= 0 ? draws(d, static_cast<Eigen::Index>(samples.layout.coefficients) + bias) : 0.0;
    const double sd = std::sqrt(draws(d, var_col));
    for (Eigen::Index j = 0; j < eta.cols(); ++j) p[j] += normal_cdf((eta(d, j) + shift) / sd);
  }
  return p / static_cast<double>(eta.rows());
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw ValidationError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("quantile level must lie in [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Summary summarize(std::span<const double> draws) {
  if (draws.empty()) throw ValidationError("summary of an empty sample");
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  Summary s;
  const double n = static_cast<double>(sorted.size());
  double sum = 0.0;
  for (double v : sorted) sum += v;
  s.mean = sum / n;
  double ss = 0.0;
  for (double v : sorted) ss += (v - s.mean) * (v - s.mean);
  s.sd = sorted.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  s.q025 = quantile_sorted(sorted, 0.025);
  s.q50 = quantile_sorted(sorted, 0.5);
  s.q975 = quantile_sorted(sorted, 0.975);
  return s;
}

std::vector<Summary> summarize_columns(const Eigen::MatrixXd& draws) {
  std::vector<Summary> out;
  out.reserve(static_cast<std::size_t>(draws.cols()));
  std::vector<double> column(static_cast<std::size_t>(draws.rows()));
  for (Eigen::Index j = 0; j < draws.cols(); ++j) {
    Eigen::Map<Eigen::VectorXd>(column.data(), draws.rows()) = draws.col(j);
    out.push_back(summarize(column));
  }
  return out;
}

PredictionTable predict_summaries(const PosteriorSamples& samples, const ModelSpec& spec,
                                  std::span<const SupportGeometry> targets, FieldRequest field,
                                  const Eigen::VectorXd* truth, int threads, std::size_t block) {
  if (truth && static_cast<std::size_t>(truth->size()) != targets.size()) {
    throw ValidationError("truth has " + std::to_string(truth->size()) + " values for " +
                          std::to_string(targets.size()) + " targets");
  }
  if (block == 0) block = 1;
  const DrawMatrix draws = samples.stacked();
  PredictionTable table;
  table.summaries.resize(targets.size());
  if (truth) table.overprediction = Eigen::VectorXd::Zero(truth->size());

  const std::size_t n_blocks = (targets.size() + block - 1) / block;
  std::vector<std::exception_ptr> errors(n_blocks);
  auto work = [&](std::size_t b) {
    try {
      const std::size_t start = b * block;
      const std::size_t count = std::min(block, targets.size() - start);
      const Eigen::MatrixXd pred =
          predict_stacked(draws, samples.layout, spec, targets.subspan(start, count), field);
      const auto s = summarize_columns(pred);
      std::copy(s.begin(), s.end(), table.summaries.begin() + static_cast<std::ptrdiff_t>(start));
      if (truth) {
        table.overprediction->segment(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(count)) =
            prob_overprediction(pred, truth->segment(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(count)));
      }
    } catch (...) {
      errors[b] = std::current_exception();
    }
  };
  const auto width = static_cast<std::size_t>(std::max(1, threads));
  for (std::size_t start = 0; start < n_blocks; start += width) {
    const std::size_t stop = std::min(n_blocks, start + width);
    std::vector<std::thread> pool;
    for (std::size_t b = start + 1; b < stop; ++b) pool.emplace_back(work, b);
    work(start);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return table;
}

FieldRequest parse_field(const std::string& name, const ModelSpec& spec) {
  if (name == "eta") return {FieldKind::Eta, 0};
  if (name == "W" || name == "residual") return {FieldKind::Residual, 0};
  if (name == "LS" || name == "suitability") return {FieldKind::Suitability, 0};
  for (std::size_t j = 0; j < spec.num_predictors(); ++j) {
    if (name == "V[" + spec.predictors()[j].source.id + "]" || name == "V" + std::to_string(j + 1)) {
      return {FieldKind::Predictor, j};
    }
  }
  throw ValidationError("unknown field '" + name + "' (expected eta, W, LS, V1.., or V[<predictor id>])");
}

}  // namespace splinecos
