#include "splinecos/basis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "splinecos/error.hpp"

namespace splinecos {

namespace {

// Index i of the knot span [t_i, t_{i+1}) of positive width containing x.
// At the right end of the knot sequence the last nonempty span is used.
std::size_t find_span(std::span<const double> t, double x) {
  if (x >= t.back()) {
    auto it = std::lower_bound(t.begin(), t.end(), t.back());
    return static_cast<std::size_t>(it - t.begin()) - 1;
  }
  auto it = std::upper_bound(t.begin(), t.end(), x);
  return static_cast<std::size_t>(it - t.begin()) - 1;
}

// The `order` basis functions that are nonzero on span i, i.e. indices
// i-order+1 .. i (de Boor's triangular scheme). Denominators are knot
// differences across span i and therefore strictly positive.
void nonzero_basis(std::span<const double> t, int order, std::size_t span, double x,
                   std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(order), 0.0);
  out[0] = 1.0;
  std::vector<double> left(static_cast<std::size_t>(order));
  std::vector<double> right(static_cast<std::size_t>(order));
  for (int j = 1; j < order; ++j) {
    left[j] = x - t[span + 1 - j];
    right[j] = t[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = out[r] / (right[r + 1] + left[j - r]);
      out[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    out[j] = saved;
  }
}

// All basis functions of `order` on knots t at x (dense).
std::vector<double> dense_basis(std::span<const double> t, int order, double x) {
  const std::size_t n = t.size() - static_cast<std::size_t>(order);
  std::vector<double> result(n, 0.0);
  const std::size_t span = find_span(t, x);
  std::vector<double> local;
  nonzero_basis(t, order, span, x, local);
  const std::size_t first = span + 1 - static_cast<std::size_t>(order);
  for (int r = 0; r < order; ++r) result[first + r] = local[r];
  return result;
}

}  // namespace

KnotVector::KnotVector(std::vector<double> knots, int order)
    : knots_(std::move(knots)), order_(order) {
  if (order_ < 1) throw ValidationError("B-spline order must be >= 1");
  const auto k = static_cast<std::size_t>(order_);
  if (knots_.size() < 2 * k) {
    throw ValidationError("knot vector needs at least 2*order knots");
  }
  for (double v : knots_) {
    if (!std::isfinite(v)) throw ValidationError("knots must be finite");
  }
  if (!std::is_sorted(knots_.begin(), knots_.end())) {
    throw ValidationError("knots must be nondecreasing");
  }
  const double lo = knots_.front();
  const double hi = knots_.back();
  if (!(hi > lo)) throw ValidationError("knot domain must be nonempty");
  const auto lo_count = static_cast<std::size_t>(std::count(knots_.begin(), knots_.end(), lo));
  const auto hi_count = static_cast<std::size_t>(std::count(knots_.begin(), knots_.end(), hi));
  if (lo_count != k || hi_count != k) {
    throw ValidationError("knots must be clamped: end knots repeated exactly `order` times");
  }
  // Interior multiplicity above the order would leave empty basis functions.
  for (std::size_t i = k; i + k < knots_.size();) {
    std::size_t j = i;
    while (j + k < knots_.size() && knots_[j] == knots_[i]) ++j;
    if (j - i > k) throw ValidationError("interior knot multiplicity exceeds the order");
    i = j;
  }
  augmented_.reserve(knots_.size() + 2);
  augmented_.push_back(lo);
  augmented_.insert(augmented_.end(), knots_.begin(), knots_.end());
  augmented_.push_back(hi);
}

void KnotVector::require_inside(double x, const char* what) const {
  if (!contains(x)) {
    std::ostringstream os;
    os << what << " " << x << " outside basis domain [" << lo() << ", " << hi() << "]";
    throw ValidationError(os.str());
  }
}

std::vector<double> KnotVector::eval_all(double x) const {
  require_inside(x, "evaluation point");
  return dense_basis(knots_, order_, x);
}

KnotVector::Nonzeros KnotVector::eval_nonzero(double x) const {
  require_inside(x, "evaluation point");
  Nonzeros nz;
  const std::size_t span = find_span(knots_, x);
  nonzero_basis(knots_, order_, span, x, nz.values);
  nz.first = span + 1 - static_cast<std::size_t>(order_);
  return nz;
}

std::vector<double> KnotVector::eval_derivative_all(double x) const {
  if (order_ < 2) throw ValidationError("derivative of an order-1 basis is not a function");
  require_inside(x, "evaluation point");
  const int k = order_;
  // Order k-1 on the same knots has q+1 functions.
  const std::vector<double> lower = dense_basis(knots_, k - 1, x);
  const std::size_t q = size();
  std::vector<double> result(q, 0.0);
  for (std::size_t j = 0; j < q; ++j) {
    double value = 0.0;
    const double d1 = knots_[j + k - 1] - knots_[j];
    const double d2 = knots_[j + k] - knots_[j + 1];
    if (d1 > 0.0) value += lower[j] / d1;
    if (d2 > 0.0) value -= lower[j + 1] / d2;
    result[j] = (k - 1) * value;
  }
  return result;
}

std::vector<double> KnotVector::integral_all(double a, double b) const {
  require_inside(a, "integration bound");
  require_inside(b, "integration bound");
  if (a > b) throw ValidationError("integration bounds must satisfy a <= b");
  const int k = order_;
  const std::size_t q = size();

  // Integral from the start of each basis function's support to x:
  //   (t_{j+k} - t_j)/k * sum_{i >= j} B_{i,k+1}(x)   for t_j < x < t_{j+k},
  // with x clipped to the support. On the augmented knots the order-(k+1)
  // function B_{i,k+1} has index i+1.
  auto cumulative = [&](double x) {
    const std::vector<double> upper = dense_basis(augmented_, k + 1, x);
    std::vector<double> tail(q + 1, 0.0);
    for (std::size_t i = q; i-- > 0;) tail[i] = tail[i + 1] + upper[i + 1];
    std::vector<double> out(q, 0.0);
    for (std::size_t j = 0; j < q; ++j) {
      const double start = knots_[j];
      const double end = knots_[j + k];
      const double scale = (end - start) / k;
      if (x <= start) {
        out[j] = 0.0;
      } else if (x >= end) {
        out[j] = scale;
      } else {
        out[j] = scale * tail[j];
      }
    }
    return out;
  };

  std::vector<double> upper = cumulative(b);
  const std::vector<double> lower = cumulative(a);
  for (std::size_t j = 0; j < q; ++j) upper[j] = std::max(0.0, upper[j] - lower[j]);
  return upper;
}

KnotVector make_clamped_knots(double lo, double hi, int n_interior, int order) {
  if (!(hi > lo)) throw ValidationError("domain must be nonempty (hi > lo)");
  if (order < 1) throw ValidationError("B-spline order must be >= 1");
  if (n_interior < 0) throw ValidationError("number of interior knots must be >= 0");
  std::vector<double> knots;
  knots.reserve(static_cast<std::size_t>(2 * order + n_interior));
  knots.insert(knots.end(), static_cast<std::size_t>(order), lo);
  const double step = (hi - lo) / (n_interior + 1);
  for (int i = 1; i <= n_interior; ++i) knots.push_back(lo + step * i);
  knots.insert(knots.end(), static_cast<std::size_t>(order), hi);
  return KnotVector(std::move(knots), order);
}

KnotVector make_clamped_basis(double lo, double hi, int n_basis, int order) {
  if (n_basis < order) {
    throw ValidationError("number of basis functions must be >= order");
  }
  return make_clamped_knots(lo, hi, n_basis - order, order);
}

SupportGeometry SupportGeometry::point(double x1, double x2) {
  if (!std::isfinite(x1) || !std::isfinite(x2)) throw ValidationError("point coordinates must be finite");
  return SupportGeometry{Point{x1, x2}, Aggregation::Average};
}

SupportGeometry SupportGeometry::rect(double lo1, double hi1, double lo2, double hi2,
                                      Aggregation weight) {
  if (!(hi1 > lo1) || !(hi2 > lo2) || !std::isfinite(lo1) || !std::isfinite(hi1) ||
      !std::isfinite(lo2) || !std::isfinite(hi2)) {
    std::ostringstream os;
    os << "rectangle must have hi > lo in both coordinates, got [" << lo1 << ", " << hi1
       << "] x [" << lo2 << ", " << hi2 << "]";
    throw ValidationError(os.str());
  }
  return SupportGeometry{Rect{lo1, hi1, lo2, hi2}, weight};
}

double SupportGeometry::area() const noexcept {
  if (const auto* r = std::get_if<Rect>(&shape)) return r->area();
  return 0.0;
}

Point SupportGeometry::centroid() const noexcept {
  if (const auto* r = std::get_if<Rect>(&shape)) {
    return Point{0.5 * (r->lo1 + r->hi1), 0.5 * (r->lo2 + r->hi2)};
  }
  return std::get<Point>(shape);
}

std::string SupportGeometry::describe() const {
  std::ostringstream os;
  if (const auto* r = std::get_if<Rect>(&shape)) {
    os << "rect [" << r->lo1 << ", " << r->hi1 << "] x [" << r->lo2 << ", " << r->hi2 << "]";
  } else {
    const auto& p = std::get<Point>(shape);
    os << "point (" << p.x1 << ", " << p.x2 << ")";
  }
  return os.str();
}

bool TensorBasis::contains(const SupportGeometry& support) const noexcept {
  if (const auto* r = std::get_if<Rect>(&support.shape)) {
    return first.contains(r->lo1) && first.contains(r->hi1) && second.contains(r->lo2) &&
           second.contains(r->hi2);
  }
  const auto& p = std::get<Point>(support.shape);
  return first.contains(p.x1) && second.contains(p.x2);
}

TensorBasis make_tensor_basis(double lo1, double hi1, double lo2, double hi2, int n_basis1,
                              int n_basis2, int order) {
  return TensorBasis{make_clamped_basis(lo1, hi1, n_basis1, order),
                     make_clamped_basis(lo2, hi2, n_basis2, order)};
}

TensorBasis make_line_basis(double lo, double hi, int n_basis, int order) {
  return TensorBasis{make_clamped_basis(lo, hi, n_basis, order), KnotVector({0.0, 1.0}, 1)};
}

DesignMatrix design_matrix(const TensorBasis& basis, std::span<const SupportGeometry> supports) {
  using Triplet = Eigen::Triplet<double>;
  std::vector<Triplet> triplets;
  const std::size_t q2 = basis.q2();
  for (std::size_t row = 0; row < supports.size(); ++row) {
    const SupportGeometry& support = supports[row];
    if (!basis.contains(support)) {
      std::ostringstream os;
      os << "support row " << row << " (" << support.describe() << ") lies outside the basis domain";
      throw ValidationError(os.str());
    }
    if (const auto* r = std::get_if<Rect>(&support.shape)) {
      const std::vector<double> f1 = basis.first.integral_all(r->lo1, r->hi1);
      const std::vector<double> f2 = basis.second.integral_all(r->lo2, r->hi2);
      const double scale = support.weight == Aggregation::Average ? 1.0 / r->area() : 1.0;
      for (std::size_t j = 0; j < f1.size(); ++j) {
        if (f1[j] == 0.0) continue;
        for (std::size_t l = 0; l < q2; ++l) {
          if (f2[l] == 0.0) continue;
          triplets.emplace_back(static_cast<int>(row), static_cast<int>(j * q2 + l),
                                f1[j] * f2[l] * scale);
        }
      }
    } else {
      const auto& p = std::get<Point>(support.shape);
      const auto n1 = basis.first.eval_nonzero(p.x1);
      const auto n2 = basis.second.eval_nonzero(p.x2);
      for (std::size_t a = 0; a < n1.values.size(); ++a) {
        if (n1.values[a] == 0.0) continue;
        for (std::size_t b = 0; b < n2.values.size(); ++b) {
          if (n2.values[b] == 0.0) continue;
          triplets.emplace_back(static_cast<int>(row),
                                static_cast<int>((n1.first + a) * q2 + n2.first + b),
                                n1.values[a] * n2.values[b]);
        }
      }
    }
  }
  DesignMatrix result(static_cast<Eigen::Index>(supports.size()),
                      static_cast<Eigen::Index>(basis.size()));
  result.setFromTriplets(triplets.begin(), triplets.end());
  return result;
}

}  // namespace splinecos
