#include "splinecos/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "splinecos/error.hpp"
#include "splinecos/gmrf.hpp"

namespace splinecos {

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::RegularGrid: return "regular-grid";
    case Scenario::IrregularGrid: return "irregular-grid";
    case Scenario::Sparse: return "sparse";
    case Scenario::Overlapping: return "overlapping";
    case Scenario::FullBinary: return "full-binary";
  }
  return "?";
}

Scenario parse_scenario(const std::string& name) {
  for (Scenario s : {Scenario::RegularGrid, Scenario::IrregularGrid, Scenario::Sparse, Scenario::Overlapping,
                     Scenario::FullBinary}) {
    if (name == to_string(s)) return s;
  }
  throw ValidationError("unknown scenario '" + name +
                        "' (valid: regular-grid, irregular-grid, sparse, overlapping, full-binary)");
}

void ScenarioConfig::validate() const {
  if (!(hi1 > lo1) || !(hi2 > lo2)) throw ValidationError("scenario domain must have positive extent");
  if (n_basis1 < order || order < 1 || (n_basis2 != 1 && n_basis2 < order)) {
    throw ValidationError("scenario basis needs at least `order` functions per axis");
  }
  if (one_dimensional() && (lo2 != 0.0 || hi2 != 1.0 || cells2 != 1)) {
    throw ValidationError("1D scenarios need the second coordinate [0, 1] with one cell");
  }
  if (!(kappa > 0.0)) throw ValidationError("scenario kappa must be positive");
  if (!(noise_variance >= 0.0)) throw ValidationError("noise variance must be non-negative");
  if (cells1 < 1 || cells2 < 1) throw ValidationError("cell counts must be positive");
  if (!(coverage > 0.0 && coverage < 1.0)) throw ValidationError("coverage must lie in (0, 1)");
  if (!(min_side > 0.0 && min_side <= max_side && max_side <= 1.0)) {
    throw ValidationError("unit sides must satisfy 0 < min_side <= max_side <= 1");
  }
  if (max_attempts < 1) throw ValidationError("max_attempts must be positive");
}

TensorBasis ScenarioConfig::basis() const {
  if (one_dimensional()) return make_line_basis(lo1, hi1, n_basis1, order);
  return make_tensor_basis(lo1, hi1, lo2, hi2, n_basis1, n_basis2, order);
}

namespace {

bool interiors_overlap(const Rect& a, const Rect& b) {
  return a.lo1 < b.hi1 && b.lo1 < a.hi1 && a.lo2 < b.hi2 && b.lo2 < a.hi2;
}

std::vector<SupportGeometry> to_supports(const std::vector<Rect>& rects) {
  std::vector<SupportGeometry> out;
  out.reserve(rects.size());
  for (const auto& r : rects) out.push_back(SupportGeometry::rect(r.lo1, r.hi1, r.lo2, r.hi2));
  return out;
}

std::vector<Rect> regular(const ScenarioConfig& cfg) {
  std::vector<Rect> rects;
  const double w1 = (cfg.hi1 - cfg.lo1) / cfg.cells1;
  const double w2 = (cfg.hi2 - cfg.lo2) / cfg.cells2;
  for (int a = 0; a < cfg.cells1; ++a) {
    for (int b = 0; b < cfg.cells2; ++b) {
      // Exact shared edges: the last cell ends on the domain boundary.
      const double hi1 = a + 1 == cfg.cells1 ? cfg.hi1 : cfg.lo1 + (a + 1) * w1;
      const double hi2 = b + 1 == cfg.cells2 ? cfg.hi2 : cfg.lo2 + (b + 1) * w2;
      rects.push_back({cfg.lo1 + a * w1, hi1, cfg.lo2 + b * w2, hi2});
    }
  }
  return rects;
}

// Repeatedly split a rectangle chosen with probability proportional to its
// area, across its longer side, at a uniform fraction in [0.2, 0.8].
std::vector<Rect> irregular(const ScenarioConfig& cfg, Rng& rng) {
  std::vector<Rect> rects{{cfg.lo1, cfg.hi1, cfg.lo2, cfg.hi2}};
  const std::size_t target = static_cast<std::size_t>(cfg.cells1) * static_cast<std::size_t>(cfg.cells2);
  const double scale1 = cfg.hi1 - cfg.lo1;
  const double scale2 = cfg.hi2 - cfg.lo2;
  while (rects.size() < target) {
    double total = 0.0;
    for (const auto& r : rects) total += r.area();
    double u = rng.uniform() * total;
    std::size_t pick = 0;
    for (; pick + 1 < rects.size(); ++pick) {
      u -= rects[pick].area();
      if (u <= 0.0) break;
    }
    const Rect r = rects[pick];
    const double f = 0.2 + 0.6 * rng.uniform();
    const bool along1 = cfg.one_dimensional() || (r.hi1 - r.lo1) / scale1 >= (r.hi2 - r.lo2) / scale2;
    if (along1) {
      const double cut = r.lo1 + f * (r.hi1 - r.lo1);
      rects[pick] = {r.lo1, cut, r.lo2, r.hi2};
      rects.push_back({cut, r.hi1, r.lo2, r.hi2});
    } else {
      const double cut = r.lo2 + f * (r.hi2 - r.lo2);
      rects[pick] = {r.lo1, r.hi1, r.lo2, cut};
      rects.push_back({r.lo1, r.hi1, cut, r.hi2});
    }
  }
  return rects;
}

Rect random_rect(const ScenarioConfig& cfg, Rng& rng) {
  const double d1 = cfg.hi1 - cfg.lo1;
  const double d2 = cfg.hi2 - cfg.lo2;
  const double s1 = d1 * (cfg.min_side + (cfg.max_side - cfg.min_side) * rng.uniform());
  const double a = cfg.lo1 + (d1 - s1) * rng.uniform();
  if (cfg.one_dimensional()) return {a, a + s1, cfg.lo2, cfg.hi2};
  const double s2 = d2 * (cfg.min_side + (cfg.max_side - cfg.min_side) * rng.uniform());
  const double b = cfg.lo2 + (d2 - s2) * rng.uniform();
  return {a, a + s1, b, b + s2};
}

std::vector<Rect> sparse(const ScenarioConfig& cfg, Rng& rng) {
  std::vector<Rect> rects;
  const double target = cfg.coverage * cfg.domain_area();
  double covered = 0.0;
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    const Rect r = random_rect(cfg, rng);
    const bool clash = std::any_of(rects.begin(), rects.end(), [&](const Rect& o) { return interiors_overlap(r, o); });
    if (clash) continue;
    rects.push_back(r);
    covered += r.area();
    if (covered >= target) return rects;
  }
  throw ValidationError("sparse layout could not reach coverage " + std::to_string(cfg.coverage) + " after " +
                        std::to_string(cfg.max_attempts) + " placement attempts");
}

std::vector<Rect> overlapping(const ScenarioConfig& cfg, Rng& rng) {
  std::vector<Rect> rects;
  const double target = cfg.coverage * cfg.domain_area();
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    rects.push_back(random_rect(cfg, rng));
    if (union_area(to_supports(rects)) >= target) return rects;
  }
  throw ValidationError("overlapping layout could not reach coverage " + std::to_string(cfg.coverage) +
                        " with " + std::to_string(cfg.max_attempts) + " units");
}

}  // namespace

std::vector<SupportGeometry> gen_units(const ScenarioConfig& cfg, Rng& rng) {
  cfg.validate();
  switch (cfg.kind) {
    case Scenario::RegularGrid: return to_supports(regular(cfg));
    case Scenario::IrregularGrid: return to_supports(irregular(cfg, rng));
    case Scenario::Sparse: return to_supports(sparse(cfg, rng));
    case Scenario::Overlapping: return to_supports(overlapping(cfg, rng));
    case Scenario::FullBinary: break;
  }
  throw ValidationError("full-binary units come from gen_full_binary");
}

double union_area(std::span<const SupportGeometry> units) {
  std::vector<Rect> rects;
  std::vector<double> xs;
  for (const auto& u : units) {
    if (!u.is_rect()) continue;
    const Rect& r = std::get<Rect>(u.shape);
    rects.push_back(r);
    xs.push_back(r.lo1);
    xs.push_back(r.hi1);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  double area = 0.0;
  std::vector<std::pair<double, double>> spans;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double a = xs[i];
    const double b = xs[i + 1];
    spans.clear();
    for (const auto& r : rects) {
      if (r.lo1 <= a && r.hi1 >= b) spans.emplace_back(r.lo2, r.hi2);
    }
    std::sort(spans.begin(), spans.end());
    double length = 0.0;
    double lo = 0.0, hi = 0.0;
    bool open = false;
    for (const auto& [s, e] : spans) {
      if (!open || s > hi) {
        if (open) length += hi - lo;
        lo = s;
        hi = e;
        open = true;
      } else {
        hi = std::max(hi, e);
      }
    }
    if (open) length += hi - lo;
    area += (b - a) * length;
  }
  return area;
}

SimulatedData gen_data(const ScenarioConfig& cfg, std::span<const SupportGeometry> units, Rng& rng) {
  cfg.validate();
  const TensorBasis basis = cfg.basis();
  const GmrfPrior prior = GmrfPrior::grid(static_cast<int>(basis.q1()), static_cast<int>(basis.q2()), cfg.kappa);
  SimulatedData data;
  data.field = prior.sample(rng);
  std::vector<SupportGeometry> weighted;
  weighted.reserve(units.size());
  for (const auto& u : units) {
    if (u.is_rect()) {
      const Rect& r = std::get<Rect>(u.shape);
      weighted.push_back(SupportGeometry::rect(r.lo1, r.hi1, r.lo2, r.hi2, cfg.aggregation));
    } else {
      weighted.push_back(u);
    }
  }
  data.noiseless = design_matrix(basis, weighted) * data.field;
  const auto n = static_cast<Eigen::Index>(units.size());
  data.variances.resize(n);
  data.values.resize(units.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double area = units[static_cast<std::size_t>(i)].area();
    double v = cfg.noise_variance;
    if (cfg.heteroscedastic()) {
      if (!(area > 0.0)) throw ValidationError("heteroscedastic noise needs units with positive area");
      v /= area;
    }
    data.variances[i] = v;
    data.values[static_cast<std::size_t>(i)] = data.noiseless[i] + std::sqrt(v) * rng.normal();
  }
  return data;
}

TensorBasis FullBinaryConfig::basis() const { return make_line_basis(0.0, length, n_basis, order); }

namespace {

std::vector<SupportGeometry> tiling(double length, double unit) {
  const double count = std::round(length / unit);
  if (count < 1.0 || std::abs(count * unit - length) > 1e-9 * length) {
    throw ValidationError("unit length " + std::to_string(unit) + " does not tile [0, " + std::to_string(length) +
                          "]");
  }
  const auto n = static_cast<int>(count);
  std::vector<SupportGeometry> out;
  for (int i = 0; i < n; ++i) {
    const double hi = i + 1 == n ? length : (i + 1) * length / n;
    out.push_back(SupportGeometry::rect(i * length / n, hi, 0.0, 1.0));
  }
  return out;
}

}  // namespace

FullBinaryData gen_full_binary(const FullBinaryConfig& cfg, Rng& rng) {
  if (!(cfg.length > 0.0) || !(cfg.kappa_v > 0.0) || !(cfg.predictor_variance >= 0.0) ||
      !(cfg.response_variance > 0.0)) {
    throw ValidationError("full-binary scenario parameters must be positive");
  }
  const TensorBasis basis = cfg.basis();
  const auto q = static_cast<int>(basis.size());
  const SparseMatrix p = structure_matrix_grid(static_cast<int>(basis.q1()), static_cast<int>(basis.q2()));
  FullBinaryData data;
  data.kappa_w = cfg.kappa_w > 0.0 ? cfg.kappa_w : unit_variance_kappa(basis, p);
  const GmrfPrior prior_v = GmrfPrior::grid(q, 1, cfg.kappa_v);
  const GmrfPrior prior_w = GmrfPrior::grid(q, 1, data.kappa_w);
  data.predictor_fields = {prior_v.sample(rng), prior_v.sample(rng)};
  data.residual_field = prior_w.sample(rng);

  const double alphas[2] = {cfg.alpha1, cfg.alpha2};
  const double units_x[2] = {cfg.predictor_unit1, cfg.predictor_unit2};
  for (int j = 0; j < 2; ++j) {
    PredictorSource src;
    src.id = "x" + std::to_string(j + 1);
    src.supports = tiling(cfg.length, units_x[j]);
    const Eigen::VectorXd v = design_matrix(basis, src.supports) * data.predictor_fields[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      src.values.push_back(alphas[j] + v[i] + std::sqrt(cfg.predictor_variance) * rng.normal());
    }
    data.predictors.push_back(std::move(src));
  }

  const double units_y[2] = {cfg.response_unit1, cfg.response_unit2};
  for (int k = 0; k < 2; ++k) {
    ResponseSource src;
    src.id = "y" + std::to_string(k + 1);
    src.family = Family::BernoulliProbit;
    src.reliable = k == 0;
    src.supports = tiling(cfg.length, units_y[k]);
    const Eigen::VectorXd eta = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(src.supports.size()), cfg.beta0) +
                                cfg.beta1 * (design_matrix(basis, src.supports) * data.predictor_fields[0]) +
                                cfg.beta2 * (design_matrix(basis, src.supports) * data.predictor_fields[1]) +
                                design_matrix(basis, src.supports) * data.residual_field;
    const double shift = k == 0 ? 0.0 : cfg.bias;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double z = eta[i] + shift + std::sqrt(cfg.response_variance) * rng.normal();
      src.values.push_back(z > 0.0 ? 1.0 : 0.0);
    }
    data.responses.push_back(std::move(src));
  }
  return data;
}

}  // namespace splinecos
