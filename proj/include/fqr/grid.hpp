#pragma once

#include "fqr/types.hpp"

namespace fqr {

/// Discretization of [0, 1] with trapezoidal quadrature weights.
struct Grid {
  Vector points;
  Vector weights;

  Index size() const { return points.size(); }

  double integrate(const Vector& f) const { return weights.dot(f); }

  double spacing() const {
    return (points[points.size() - 1] - points[0]) / static_cast<double>(points.size() - 1);
  }
};

/// Equispaced grid on [0,1] with trapezoidal weights (h/2, h, ..., h, h/2).
Grid make_grid(Index num_points);

/// Grid over the given strictly increasing points, trapezoidal weights.
Grid make_grid_from_points(const Vector& points);

bool same_grid(const Grid& a, const Grid& b, double tol = 1e-12);

/// Piecewise-linear interpolation of (xs, ys) at x; xs strictly increasing.
/// Constant extrapolation outside the range.
double interp_linear(const Vector& xs, const Vector& ys, double x);

Vector interp_linear(const Vector& xs, const Vector& ys, const Vector& at);

}  // namespace fqr
