#pragma once

#include <cstddef>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "splinecos/random.hpp"

namespace splinecos {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

/// First-order intrinsic structure on the q1 x q2 basis grid: the graph
/// Laplacian D - A of the 4-neighbour lattice, indexed j * q2 + l.
SparseMatrix structure_matrix_grid(int q1, int q2);

/// Intrinsic GMRF with precision scale * structure.
class GmrfPrior {
 public:
  /// The structure must be a connected-graph Laplacian (one null direction).
  GmrfPrior(SparseMatrix structure, double scale);

  static GmrfPrior grid(int q1, int q2, double scale);

  const SparseMatrix& structure() const noexcept { return structure_; }
  double scale() const noexcept { return scale_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(structure_.rows()); }
  int rank_deficiency() const noexcept { return 1; }
  std::size_t rank() const noexcept { return size() - 1; }
  /// log of the product of the nonzero eigenvalues of the structure matrix.
  double log_gendet_structure() const noexcept { return log_gendet_; }

  GmrfPrior with_scale(double scale) const;

  /// Log density including the generalised determinant; invariant to
  /// adding a constant to delta.
  double log_density(const Vector& delta) const;

  /// delta' P delta.
  double quadratic_form(const Vector& delta) const;

  /// Zero-sum draw from the intrinsic prior. Samples N(0, (scale*P + eps*I)^-1)
  /// and conditions on sum(delta) = 0, which for this precision is exact centering.
  Vector sample(Rng& rng, double ridge = 1e-8) const;

 private:
  SparseMatrix structure_;
  double scale_;
  double log_gendet_;
};

/// log gendet of a connected-graph Laplacian via the matrix-tree identity
/// gendet(P) = q * det(P with the last row and column removed).
double log_gendet_laplacian(const SparseMatrix& laplacian);

}  // namespace splinecos
