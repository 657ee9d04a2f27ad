#include "fqr/grid.hpp"

#include <algorithm>
#include <cmath>

namespace fqr {

Grid make_grid(Index num_points) {
  if (num_points < 2) raise(ErrorCode::InvalidSize, "grid needs at least 2 points");
  Grid g;
  g.points = Vector::LinSpaced(num_points, 0.0, 1.0);
  double h = 1.0 / static_cast<double>(num_points - 1);
  g.weights = Vector::Constant(num_points, h);
  g.weights[0] = 0.5 * h;
  g.weights[num_points - 1] = 0.5 * h;
  return g;
}

Grid make_grid_from_points(const Vector& points) {
  Index n = points.size();
  if (n < 2) raise(ErrorCode::InvalidSize, "grid needs at least 2 points");
  for (Index i = 1; i < n; ++i) {
    if (!(points[i] > points[i - 1]))
      raise(ErrorCode::InvalidSize, "grid points must be strictly increasing");
  }
  Grid g;
  g.points = points;
  g.weights = Vector::Zero(n);
  for (Index i = 0; i + 1 < n; ++i) {
    double h = points[i + 1] - points[i];
    g.weights[i] += 0.5 * h;
    g.weights[i + 1] += 0.5 * h;
  }
  return g;
}

bool same_grid(const Grid& a, const Grid& b, double tol) {
  if (a.size() != b.size()) return false;
  return (a.points - b.points).cwiseAbs().maxCoeff() <= tol;
}

double interp_linear(const Vector& xs, const Vector& ys, double x) {
  Index n = xs.size();
  if (x <= xs[0]) return ys[0];
  if (x >= xs[n - 1]) return ys[n - 1];
  const double* begin = xs.data();
  Index hi = static_cast<Index>(std::upper_bound(begin, begin + n, x) - begin);
  Index lo = hi - 1;
  double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return (1.0 - t) * ys[lo] + t * ys[hi];
}

Vector interp_linear(const Vector& xs, const Vector& ys, const Vector& at) {
  Vector out(at.size());
  for (Index i = 0; i < at.size(); ++i) out[i] = interp_linear(xs, ys, at[i]);
  return out;
}

}  // namespace fqr
