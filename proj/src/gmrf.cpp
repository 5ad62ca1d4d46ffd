#include "splinecos/gmrf.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/SparseCholesky>

#include "splinecos/error.hpp"

namespace splinecos {

SparseMatrix structure_matrix_grid(int q1, int q2) {
  if (q1 < 1 || q2 < 1) throw ValidationError("structure grid sizes must be >= 1");
  const int q = q1 * q2;
  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<double> degree(static_cast<std::size_t>(q), 0.0);
  auto edge = [&](int a, int b) {
    triplets.emplace_back(a, b, -1.0);
    triplets.emplace_back(b, a, -1.0);
    degree[a] += 1.0;
    degree[b] += 1.0;
  };
  for (int j = 0; j < q1; ++j) {
    for (int l = 0; l < q2; ++l) {
      const int idx = j * q2 + l;
      if (j + 1 < q1) edge(idx, idx + q2);
      if (l + 1 < q2) edge(idx, idx + 1);
    }
  }
  for (int i = 0; i < q; ++i) triplets.emplace_back(i, i, degree[i]);
  SparseMatrix p(q, q);
  p.setFromTriplets(triplets.begin(), triplets.end());
  return p;
}

double log_gendet_laplacian(const SparseMatrix& laplacian) {
  const Eigen::Index q = laplacian.rows();
  if (q == 1) return 0.0;
  const SparseMatrix grounded = laplacian.topLeftCorner(q - 1, q - 1);
  Eigen::SimplicialLLT<SparseMatrix> llt(grounded);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("structure matrix is not a connected-graph Laplacian");
  }
  double log_det = 0.0;
  const auto& l = llt.matrixL();
  const SparseMatrix factor = l;
  for (Eigen::Index i = 0; i < factor.rows(); ++i) log_det += 2.0 * std::log(factor.coeff(i, i));
  return std::log(static_cast<double>(q)) + log_det;
}

GmrfPrior::GmrfPrior(SparseMatrix structure, double scale)
    : structure_(std::move(structure)), scale_(scale) {
  if (structure_.rows() != structure_.cols() || structure_.rows() == 0) {
    throw ValidationError("GMRF structure must be a nonempty square matrix");
  }
  if (!(scale_ > 0.0) || !std::isfinite(scale_)) {
    throw ValidationError("GMRF scale must be positive");
  }
  log_gendet_ = log_gendet_laplacian(structure_);
}

GmrfPrior GmrfPrior::grid(int q1, int q2, double scale) {
  return GmrfPrior(structure_matrix_grid(q1, q2), scale);
}

GmrfPrior GmrfPrior::with_scale(double scale) const {
  GmrfPrior copy = *this;
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ValidationError("GMRF scale must be positive");
  copy.scale_ = scale;
  return copy;
}

double GmrfPrior::quadratic_form(const Vector& delta) const {
  if (static_cast<std::size_t>(delta.size()) != size()) {
    throw ValidationError("GMRF vector length does not match the structure matrix");
  }
  return delta.dot(structure_ * delta);
}

double GmrfPrior::log_density(const Vector& delta) const {
  const double quad = quadratic_form(delta);
  const double r = static_cast<double>(rank());
  return -0.5 * r * std::log(2.0 * std::numbers::pi) +
         0.5 * (r * std::log(scale_) + log_gendet_) - 0.5 * scale_ * quad;
}

Vector GmrfPrior::sample(Rng& rng, double ridge) const {
  const auto q = static_cast<Eigen::Index>(size());
  SparseMatrix precision = scale_ * structure_;
  for (Eigen::Index i = 0; i < q; ++i) precision.coeffRef(i, i) += ridge;
  Eigen::SimplicialLLT<SparseMatrix> llt(precision);
  if (llt.info() != Eigen::Success) throw NumericalError("GMRF prior precision factorization failed");
  Vector z(q);
  for (Eigen::Index i = 0; i < q; ++i) z[i] = rng.normal();
  // precision = P' L L' P, so P' L'^{-1} z has covariance precision^{-1}.
  Vector draw = llt.permutationPinv() * llt.matrixU().solve(z);
  // The null direction carries variance 1/ridge; a second pass removes
  // the rounding left by the first.
  draw.array() -= draw.mean();
  draw.array() -= draw.mean();
  return draw;
}

}  // namespace splinecos
