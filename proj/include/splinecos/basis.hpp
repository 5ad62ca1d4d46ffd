#pragma once

// B-spline bases on clamped knot sequences and their tensor products.
//
// One-dimensional bases are evaluated with the Cox-de Boor recurrence,
// differentiated through the order-(k-1) basis and integrated exactly
// through the order-(k+1) basis on the same knots. Two-dimensional
// bases are tensor products; integrals over axis-aligned rectangles
// factor into products of 1D integrals.

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/SparseCore>

namespace splinecos {

/// Row-major compressed sparse matrix; rows are supports, columns basis functions.
using DesignMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

class KnotVector {
 public:
  /// A single constant function on [0, 1].
  KnotVector() : knots_{0.0, 1.0}, order_(1) {}
  /// Knots must be nondecreasing, clamped (first/last knot repeated exactly
  /// `order` times) and have at least 2*order entries.
  KnotVector(std::vector<double> knots, int order);

  int order() const noexcept { return order_; }
  /// Number of basis functions q = len(knots) - order.
  std::size_t size() const noexcept { return knots_.size() - static_cast<std::size_t>(order_); }
  double lo() const noexcept { return knots_.front(); }
  double hi() const noexcept { return knots_.back(); }
  const std::vector<double>& knots() const noexcept { return knots_; }
  bool contains(double x) const noexcept { return x >= lo() && x <= hi(); }

  /// B_{j,k}(x) for all j. The last basis function is right-closed so
  /// that x == hi() is defined.
  std::vector<double> eval_all(double x) const;

  /// First derivative of every basis function; requires order >= 2.
  std::vector<double> eval_derivative_all(double x) const;

  /// Exact integral of every basis function over [a, b].
  std::vector<double> integral_all(double a, double b) const;

  /// The at most `order` nonzero values at x, starting at basis index `first`.
  struct Nonzeros {
    std::size_t first = 0;
    std::vector<double> values;
  };
  Nonzeros eval_nonzero(double x) const;

  bool operator==(const KnotVector& other) const = default;

 private:
  void require_inside(double x, const char* what) const;

  std::vector<double> knots_;
  // knots_ with one extra copy of lo and hi; carries the order-(k+1)
  // basis used for integration.
  std::vector<double> augmented_;
  int order_;
};

/// Uniformly spaced interior knots with clamped ends; q = n_interior + order.
KnotVector make_clamped_knots(double lo, double hi, int n_interior, int order);

/// Clamped knots chosen so the basis has exactly `n_basis` functions.
KnotVector make_clamped_basis(double lo, double hi, int n_basis, int order);

enum class Aggregation { Average, Total };

struct Point {
  double x1 = 0.0;
  double x2 = 0.0;
  bool operator==(const Point&) const = default;
};

struct Rect {
  double lo1 = 0.0;
  double hi1 = 0.0;
  double lo2 = 0.0;
  double hi2 = 0.0;
  double area() const noexcept { return (hi1 - lo1) * (hi2 - lo2); }
  bool operator==(const Rect&) const = default;
};

/// A sampling unit: a point or an axis-aligned rectangle. Rectangles
/// aggregate the process either as an average over the area or as a total.
struct SupportGeometry {
  std::variant<Point, Rect> shape;
  Aggregation weight = Aggregation::Average;

  static SupportGeometry point(double x1, double x2);
  static SupportGeometry rect(double lo1, double hi1, double lo2, double hi2,
                              Aggregation weight = Aggregation::Average);

  bool is_point() const noexcept { return std::holds_alternative<Point>(shape); }
  bool is_rect() const noexcept { return std::holds_alternative<Rect>(shape); }
  /// Zero for points.
  double area() const noexcept;
  Point centroid() const noexcept;
  std::string describe() const;

  bool operator==(const SupportGeometry&) const = default;
};

/// Tensor product of two 1D bases; basis (j, l) has flat index j * q2 + l.
struct TensorBasis {
  KnotVector first;
  KnotVector second;

  std::size_t size() const noexcept { return first.size() * second.size(); }
  std::size_t q1() const noexcept { return first.size(); }
  std::size_t q2() const noexcept { return second.size(); }
  std::size_t flat_index(std::size_t j, std::size_t l) const noexcept { return j * q2() + l; }
  bool contains(const SupportGeometry& support) const noexcept;
  double domain_area() const noexcept {
    return (first.hi() - first.lo()) * (second.hi() - second.lo());
  }

  bool operator==(const TensorBasis&) const = default;
};

/// Square-domain tensor basis with n_basis functions per coordinate.
TensorBasis make_tensor_basis(double lo1, double hi1, double lo2, double hi2,
                              int n_basis1, int n_basis2, int order);

/// 1D basis embedded in 2D: the second coordinate is a single order-1
/// indicator on [0, 1], so a 1D interval [a, b] is the Rect [a, b] x [0, 1].
TensorBasis make_line_basis(double lo, double hi, int n_basis, int order);

/// One row per support: point evaluations b(s) or rectangle integrals
/// (divided by the area for Average weights).
DesignMatrix design_matrix(const TensorBasis& basis, std::span<const SupportGeometry> supports);

}  // namespace splinecos
