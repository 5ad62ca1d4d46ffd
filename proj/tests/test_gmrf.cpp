#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "doctest.h"
#include "splinecos/error.hpp"
#include "splinecos/gmrf.hpp"

using namespace splinecos;

namespace {

Eigen::VectorXd eigenvalues(const SparseMatrix& p) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver{Eigen::MatrixXd(p)};
  return solver.eigenvalues();
}

// Moore-Penrose inverse from the dense eigendecomposition.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  Eigen::VectorXd inv = solver.eigenvalues();
  for (Eigen::Index i = 0; i < inv.size(); ++i) inv[i] = inv[i] > 1e-9 ? 1.0 / inv[i] : 0.0;
  return solver.eigenvectors() * inv.asDiagonal() * solver.eigenvectors().transpose();
}

}  // namespace

TEST_CASE("grid structure matrices") {
  const Eigen::MatrixXd two = Eigen::MatrixXd(structure_matrix_grid(1, 2));
  Eigen::MatrixXd expected(2, 2);
  expected << 1, -1, -1, 1;
  CHECK(two.isApprox(expected));

  const Eigen::MatrixXd square = Eigen::MatrixXd(structure_matrix_grid(2, 2));
  for (int i = 0; i < 4; ++i) CHECK(square(i, i) == 2.0);
  CHECK(square(0, 1) == -1.0);
  CHECK(square(0, 2) == -1.0);
  CHECK(square(0, 3) == 0.0);
  CHECK(square.rowwise().sum().cwiseAbs().maxCoeff() == 0.0);

  const SparseMatrix big = structure_matrix_grid(20, 20);
  const Eigen::MatrixXd dense(big);
  CHECK((dense - dense.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(dense.rowwise().sum().cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < 400; ++i) {
    CHECK(dense(i, i) > 0.0);
    for (int j = 0; j < 400; ++j) {
      if (i != j) CHECK(dense(i, j) <= 0.0);
    }
  }
  const Eigen::VectorXd eig = eigenvalues(big);
  int positive = 0;
  double log_gendet = 0.0;
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    if (eig[i] > 1e-9) {
      ++positive;
      log_gendet += std::log(eig[i]);
    }
  }
  CHECK(positive == 399);
  const GmrfPrior prior(big, 1.0);
  CHECK(prior.rank() == 399);
  CHECK(prior.log_gendet_structure() == doctest::Approx(log_gendet).epsilon(1e-10));

  CHECK_THROWS_AS(structure_matrix_grid(0, 3), ValidationError);
}

TEST_CASE("log density against a dense eigen oracle") {
  const GmrfPrior chain = GmrfPrior::grid(1, 4, 2.0);
  Eigen::VectorXd delta(4);
  delta << 0, 1, 0, -1;
  const Eigen::VectorXd eig = eigenvalues(2.0 * chain.structure());
  double log_gendet = 0.0;
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    if (eig[i] > 1e-9) log_gendet += std::log(eig[i]);
  }
  const double quad = delta.dot(Eigen::MatrixXd(chain.structure()) * delta);
  const double expected = -1.5 * std::log(2 * std::numbers::pi) + 0.5 * log_gendet - 0.5 * 2.0 * quad;
  CHECK(std::abs(chain.log_density(delta) - expected) < 1e-10);

  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
  CHECK(std::abs(chain.log_density(zero) - (-1.5 * std::log(2 * std::numbers::pi) + 0.5 * log_gendet)) < 1e-10);

  // Invariance along the null direction and the scale identity.
  const Eigen::VectorXd shifted = delta.array() + 3.7;
  CHECK(chain.log_density(shifted) == doctest::Approx(chain.log_density(delta)).epsilon(1e-14));
  const GmrfPrior unit = chain.with_scale(1.0);
  const double identity = unit.log_density(delta) + 1.5 * std::log(2.0) - 0.5 * (2.0 - 1.0) * quad;
  CHECK(std::abs(chain.log_density(delta) - identity) < 1e-10);

  CHECK_THROWS_AS(chain.log_density(Eigen::VectorXd::Zero(3)), ValidationError);
  CHECK_THROWS_AS(GmrfPrior::grid(2, 2, 0.0), ValidationError);
}

TEST_CASE("prior samples") {
  const GmrfPrior prior = GmrfPrior::grid(3, 3, 0.5);
  Rng rng(2024);
  const int n = 10000;
  Eigen::MatrixXd draws(n, 9);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd d = prior.sample(rng);
    CHECK(std::abs(d.sum()) <= 1e-10);
    draws.row(i) = d.transpose();
  }
  const Eigen::MatrixXd cov = pseudo_inverse(0.5 * Eigen::MatrixXd(prior.structure()));
  for (int j = 0; j < 9; ++j) {
    const double mean = draws.col(j).mean();
    CHECK(std::abs(mean) < 4.0 * std::sqrt(cov(j, j) / n));
  }
  // Neighbour differences (0,1), (0,3), (4,5).
  for (auto [a, b] : {std::pair{0, 1}, std::pair{0, 3}, std::pair{4, 5}}) {
    const Eigen::VectorXd diff = draws.col(a) - draws.col(b);
    const double empirical = diff.squaredNorm() / n - diff.mean() * diff.mean();
    const double theory = cov(a, a) + cov(b, b) - 2 * cov(a, b);
    CHECK(std::abs(empirical / theory - 1.0) < 0.06);
  }

  const GmrfPrior big = GmrfPrior::grid(20, 20, 0.09);
  for (int i = 0; i < 20; ++i) CHECK(std::abs(big.sample(rng).sum()) <= 1e-10);
}
