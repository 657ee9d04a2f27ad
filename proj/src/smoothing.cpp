#include "fqr/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

namespace fqr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Window {
  Index lo = 0;  // first index with x >= e - h
  Index hi = 0;  // one past last index with x <= e + h
};

Window find_window(const Vector& x, double e, double h) {
  const double* begin = x.data();
  const double* end = begin + x.size();
  Window w;
  w.lo = static_cast<Index>(std::lower_bound(begin, end, e - h) - begin);
  w.hi = static_cast<Index>(std::upper_bound(begin, end, e + h) - begin);
  return w;
}

// Local linear fit at a single point; returns equivalent weights when alpha
// is non-null. Points with non-positive multiplicity weight are skipped.
double local_linear_at(const Vector& x, const Vector& y, const Vector& w, double e, double h,
                       Vector* alpha) {
  Window win = find_window(x, e, h);
  double m0 = 0, m1 = 0, m2 = 0, r0 = 0, r1 = 0;
  Index distinct = 0;
  double last_x = kInf;
  for (Index j = win.lo; j < win.hi; ++j) {
    if (w[j] <= 0.0) continue;
    double u = (x[j] - e) / h;
    double k = epanechnikov(u) * w[j];
    if (k <= 0.0) continue;
    if (x[j] != last_x) {
      ++distinct;
      last_x = x[j];
    }
    m0 += k;
    m1 += k * u;
    m2 += k * u * u;
    r0 += k * y[j];
    r1 += k * u * y[j];
  }
  double det = m0 * m2 - m1 * m1;
  if (distinct >= 2 && det > 1e-10 * m0 * m2) {
    if (alpha) {
      alpha->setZero();
      for (Index j = win.lo; j < win.hi; ++j) {
        if (w[j] <= 0.0) continue;
        double u = (x[j] - e) / h;
        double k = epanechnikov(u) * w[j];
        if (k <= 0.0) continue;
        (*alpha)[j] = k * (m2 - m1 * u) / det;
      }
    }
    return (m2 * r0 - m1 * r1) / det;
  }
  if (m0 > 0.0) {  // degenerate local design: local constant
    if (alpha) {
      alpha->setZero();
      for (Index j = win.lo; j < win.hi; ++j) {
        if (w[j] <= 0.0) continue;
        double u = (x[j] - e) / h;
        double k = epanechnikov(u) * w[j];
        (*alpha)[j] = k / m0;
      }
    }
    return r0 / m0;
  }
  // empty window: nearest observation with positive weight
  Index best = -1;
  double best_dist = kInf;
  for (Index j = 0; j < x.size(); ++j) {
    if (w[j] <= 0.0) continue;
    double d = std::abs(x[j] - e);
    if (d < best_dist) {
      best_dist = d;
      best = j;
    }
  }
  if (best < 0) raise(ErrorCode::InvalidSize, "smoother called with no data");
  if (alpha) {
    alpha->setZero();
    (*alpha)[best] = 1.0;
  }
  return y[best];
}

bool is_sorted(const Vector& x) {
  for (Index i = 1; i < x.size(); ++i) {
    if (x[i] < x[i - 1]) return false;
  }
  return true;
}

bool is_equispaced(const Vector& p) {
  if (p.size() < 2) return false;
  double d = (p[p.size() - 1] - p[0]) / static_cast<double>(p.size() - 1);
  for (Index i = 1; i < p.size(); ++i) {
    if (std::abs(p[i] - p[i - 1] - d) > 1e-12) return false;
  }
  return true;
}

}  // namespace

Vector local_linear(const Vector& x, const Vector& y, const Vector& w, const Vector& eval,
                    double bandwidth) {
  if (bandwidth <= 0.0) raise(ErrorCode::InvalidConfig, "bandwidth must be positive");
  if (x.size() != y.size() || x.size() != w.size())
    raise(ErrorCode::InvalidSize, "local_linear: x/y/w length mismatch");
  if (!is_sorted(x)) {
    std::vector<Index> order(x.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) { return x[a] < x[b]; });
    Vector xs(x.size()), ys(x.size()), ws(x.size());
    for (Index i = 0; i < x.size(); ++i) {
      xs[i] = x[order[i]];
      ys[i] = y[order[i]];
      ws[i] = w[order[i]];
    }
    return local_linear(xs, ys, ws, eval, bandwidth);
  }
  Vector out(eval.size());
  for (Index e = 0; e < eval.size(); ++e) {
    out[e] = local_linear_at(x, y, w, eval[e], bandwidth, nullptr);
  }
  return out;
}

Matrix local_linear_matrix(const Vector& x, const Vector& eval, double bandwidth) {
  if (bandwidth <= 0.0) raise(ErrorCode::InvalidConfig, "bandwidth must be positive");
  if (!is_sorted(x)) raise(ErrorCode::InvalidSize, "local_linear_matrix requires sorted x");
  Matrix A(eval.size(), x.size());
  Vector ones = Vector::Ones(x.size());
  Vector dummy_y = Vector::Zero(x.size());
  Vector alpha(x.size());
  for (Index e = 0; e < eval.size(); ++e) {
    local_linear_at(x, dummy_y, ones, eval[e], bandwidth, &alpha);
    A.row(e) = alpha;
  }
  return A;
}

Vector bandwidth_ladder(double lo, double hi, int count) {
  if (!(lo > 0.0) || hi < lo || count < 1)
    raise(ErrorCode::InvalidConfig, "invalid bandwidth ladder");
  if (count == 1 || hi == lo) return Vector::Constant(1, lo);
  Vector ladder(count);
  double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < count; ++i) {
    ladder[i] = std::exp(llo + (lhi - llo) * static_cast<double>(i) / (count - 1));
  }
  return ladder;
}

Vector smooth_trajectory(const SubjectRecord& subject, const Grid& grid, double bandwidth) {
  Vector ones = Vector::Ones(subject.num_obs());
  return local_linear(subject.t, subject.w, ones, grid.points, bandwidth);
}

namespace {

double max_distinct_gap(const Vector& sorted_t) {
  double gap = 0.0;
  double prev = sorted_t[0];
  for (Index i = 1; i < sorted_t.size(); ++i) {
    if (sorted_t[i] > prev) {
      gap = std::max(gap, sorted_t[i] - prev);
      prev = sorted_t[i];
    }
  }
  return gap;
}

Vector trajectory_ladder(const FunctionalDataset& data, Index pilot) {
  double gap = 0.0, t_lo = kInf, t_hi = -kInf;
  for (Index i = 0; i < pilot; ++i) {
    const auto& s = data.subjects[i];
    gap = std::max(gap, max_distinct_gap(s.t));
    t_lo = std::min(t_lo, s.t[0]);
    t_hi = std::max(t_hi, s.t[s.num_obs() - 1]);
  }
  double range = std::max(t_hi - t_lo, 1e-6);
  double lo = std::max(2.02 * gap, 1e-4 * range);
  double hi = std::max(0.5 * range, 2.0 * lo);
  return bandwidth_ladder(lo, hi);
}

}  // namespace

double gcv_trajectory_bandwidth(const FunctionalDataset& data, Index pilot_cap) {
  Index pilot = std::min(data.n(), pilot_cap);
  if (pilot < 1) raise(ErrorCode::InvalidSize, "empty dataset");
  Vector ladder = trajectory_ladder(data, pilot);
  bool common = data.common_design();
  double best_h = ladder[ladder.size() - 1];
  double best_gcv = kInf;
  for (Index li = 0; li < ladder.size(); ++li) {
    double h = ladder[li];
    double rss = 0.0, tr = 0.0, total = 0.0;
    if (common) {
      const Vector& t0 = data.subjects[0].t;
      Matrix A = local_linear_matrix(t0, t0, h);
      tr = A.trace() * static_cast<double>(pilot);
      for (Index i = 0; i < pilot; ++i) {
        const Vector& w = data.subjects[i].w;
        rss += (w - A * w).squaredNorm();
      }
      total = static_cast<double>(pilot * t0.size());
    } else {
      for (Index i = 0; i < pilot; ++i) {
        const auto& s = data.subjects[i];
        Matrix A = local_linear_matrix(s.t, s.t, h);
        tr += A.trace();
        rss += (s.w - A * s.w).squaredNorm();
        total += static_cast<double>(s.num_obs());
      }
    }
    double denom = 1.0 - tr / total;
    if (denom < 0.05) continue;  // over-parameterized fit, reject
    double gcv = (rss / total) / (denom * denom);
    if (gcv < best_gcv) {
      best_gcv = gcv;
      best_h = h;
    }
  }
  return best_h;
}

SmoothedCurves smooth_trajectories(const FunctionalDataset& data, const Grid& grid,
                                   double bandwidth) {
  if (data.n() < 1) raise(ErrorCode::InvalidSize, "empty dataset");
  double h = bandwidth > 0.0 ? bandwidth : gcv_trajectory_bandwidth(data);
  SmoothedCurves out;
  out.grid = grid;
  out.bandwidth = h;
  out.curves.resize(data.n(), grid.size());
  double rss = 0.0;
  double total = 0.0;
  if (data.common_design()) {
    const Vector& t0 = data.subjects[0].t;
    Matrix S = local_linear_matrix(t0, grid.points, h);
    Matrix A = local_linear_matrix(t0, t0, h);
    for (Index i = 0; i < data.n(); ++i) {
      const Vector& w = data.subjects[i].w;
      out.curves.row(i) = (S * w).transpose();
      rss += (w - A * w).squaredNorm() / static_cast<double>(w.size());
    }
    total = static_cast<double>(data.n());
  } else {
    for (Index i = 0; i < data.n(); ++i) {
      const auto& s = data.subjects[i];
      out.curves.row(i) = smooth_trajectory(s, grid, h).transpose();
      Matrix A = local_linear_matrix(s.t, s.t, h);
      rss += (s.w - A * s.w).squaredNorm() / static_cast<double>(s.num_obs());
    }
    total = static_cast<double>(data.n());
  }
  out.mean_residual_var = rss / total;
  return out;
}

namespace {

// Pooled observation cloud aligned on the union of observation times.
// Column f of `sum`/`weight` holds fold f's accumulations.
struct AlignedCloud {
  Vector x;       // ascending unique times
  Matrix sum;     // unique-times x folds
  Matrix weight;  // unique-times x folds

  Vector total_sum() const { return sum.rowwise().sum(); }
  Vector total_weight() const { return weight.rowwise().sum(); }
};

AlignedCloud align_points(const std::vector<std::pair<double, double>>& points,
                          const std::vector<int>& fold_of_point, int folds) {
  std::vector<double> xs(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) xs[i] = points[i].first;
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  AlignedCloud cloud;
  cloud.x = Eigen::Map<Vector>(xs.data(), static_cast<Index>(xs.size()));
  cloud.sum = Matrix::Zero(cloud.x.size(), folds);
  cloud.weight = Matrix::Zero(cloud.x.size(), folds);
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto it = std::lower_bound(xs.begin(), xs.end(), points[i].first);
    Index u = static_cast<Index>(it - xs.begin());
    int f = fold_of_point[i];
    cloud.sum(u, f) += points[i].second;
    cloud.weight(u, f) += 1.0;
  }
  return cloud;
}

Vector values_of(const Vector& sum, const Vector& weight) {
  Vector y = Vector::Zero(sum.size());
  for (Index i = 0; i < sum.size(); ++i) {
    if (weight[i] > 0.0) y[i] = sum[i] / weight[i];
  }
  return y;
}

// Cross-validated bandwidth over an aligned cloud; squared-error score with
// the h-independent term dropped.
double cv_curve_bandwidth(const AlignedCloud& cloud, const Vector& ladder) {
  int folds = static_cast<int>(cloud.sum.cols());
  Vector tot_sum = cloud.total_sum();
  Vector tot_weight = cloud.total_weight();
  double best_h = ladder[ladder.size() - 1];
  double best_err = kInf;
  for (Index li = 0; li < ladder.size(); ++li) {
    double h = ladder[li];
    double err = 0.0;
    bool usable = true;
    for (int f = 0; f < folds && usable; ++f) {
      Vector fw = cloud.weight.col(f);
      if (fw.sum() <= 0.0) continue;
      Vector tw = tot_weight - fw;
      if (tw.sum() <= 0.0) {
        usable = false;
        break;
      }
      Vector ts = tot_sum - cloud.sum.col(f);
      Vector y = values_of(ts, tw);
      Vector pred = local_linear(cloud.x, y, tw, cloud.x, h);
      for (Index u = 0; u < cloud.x.size(); ++u) {
        if (fw[u] > 0.0) err += fw[u] * pred[u] * pred[u] - 2.0 * pred[u] * cloud.sum(u, f);
      }
    }
    if (usable && err < best_err) {
      best_err = err;
      best_h = h;
    }
  }
  return best_h;
}

AlignedCloud pooled_cloud(const FunctionalDataset& data, int folds) {
  std::vector<std::pair<double, double>> points;
  std::vector<int> fold_of_point;
  points.reserve(data.total_obs());
  for (Index i = 0; i < data.n(); ++i) {
    const auto& s = data.subjects[i];
    for (Index j = 0; j < s.num_obs(); ++j) {
      points.emplace_back(s.t[j], s.w[j]);
      fold_of_point.push_back(static_cast<int>(i % folds));
    }
  }
  return align_points(points, fold_of_point, folds);
}

Vector cloud_ladder(const Vector& unique_x, double hi_frac) {
  double gap = max_distinct_gap(unique_x);
  double range = std::max(unique_x[unique_x.size() - 1] - unique_x[0], 1e-6);
  double lo = std::max(2.02 * gap, 1e-4 * range);
  double hi = std::max(hi_frac * range, 2.0 * lo);
  return bandwidth_ladder(lo, hi);
}

}  // namespace

Vector pooled_mean(const FunctionalDataset& data, const Grid& grid, double bandwidth) {
  AlignedCloud cloud = pooled_cloud(data, 1);
  Vector w = cloud.total_weight();
  Vector y = values_of(cloud.total_sum(), w);
  return local_linear(cloud.x, y, w, grid.points, bandwidth);
}

double cv_pooled_mean_bandwidth(const FunctionalDataset& data, const Grid& grid, int folds) {
  (void)grid;
  folds = static_cast<int>(std::min<Index>(folds, data.n()));
  AlignedCloud cloud = pooled_cloud(data, std::max(folds, 1));
  if (cloud.x.size() < 2) raise(ErrorCode::InvalidSize, "need at least 2 distinct times");
  return cv_curve_bandwidth(cloud, cloud_ladder(cloud.x, 0.5));
}

Vector estimate_mean(const FunctionalDataset& data, const Grid& grid, double bandwidth,
                     Design design) {
  if (data.n() < 2) raise(ErrorCode::InvalidSize, "mean estimation needs n >= 2");
  if (design == Design::Dense) {
    SmoothedCurves curves = smooth_trajectories(data, grid, bandwidth);
    return curves.curves.colwise().mean().transpose();
  }
  double h = bandwidth > 0.0 ? bandwidth : cv_pooled_mean_bandwidth(data, grid);
  return pooled_mean(data, grid, h);
}

CovarianceEstimate estimate_covariance_dense(const SmoothedCurves& curves, const Vector& mean) {
  Index n = curves.curves.rows();
  if (n < 2) raise(ErrorCode::InvalidSize, "covariance needs n >= 2");
  if (mean.size() != curves.grid.size())
    raise(ErrorCode::GridMismatch, "mean length does not match grid");
  Matrix centered = curves.curves.rowwise() - mean.transpose();
  Matrix s = (centered.transpose() * centered) / static_cast<double>(n);
  CovarianceEstimate cov;
  cov.grid = curves.grid;
  cov.mean = mean;
  cov.surface = 0.5 * (s + s.transpose());
  cov.noise_var = std::max(0.0, curves.mean_residual_var);
  return cov;
}

// ---------------------------------------------------------------------------
// bivariate smoother
// ---------------------------------------------------------------------------

namespace detail {

namespace {

struct BinnedSurface {
  Matrix weight;
  Matrix sum;

  BinnedSurface() = default;
  BinnedSurface(Index g) : weight(Matrix::Zero(g, g)), sum(Matrix::Zero(g, g)) {}
};

std::optional<Index> grid_index_of(const Grid& grid, double v) {
  double d = grid.spacing();
  double pos = (v - grid.points[0]) / d;
  Index i = static_cast<Index>(std::llround(pos));
  if (i < 0 || i >= grid.size()) return std::nullopt;
  if (std::abs(v - grid.points[i]) > 1e-9) return std::nullopt;
  return i;
}

std::optional<BinnedSurface> bin_cloud(const PairCloud& cloud, const Grid& grid) {
  if (!is_equispaced(grid.points)) return std::nullopt;
  BinnedSurface b(grid.size());
  for (std::size_t i = 0; i < cloud.s.size(); ++i) {
    auto a = grid_index_of(grid, cloud.s[i]);
    auto c = grid_index_of(grid, cloud.t[i]);
    if (!a || !c) return std::nullopt;
    b.weight(*a, *c) += cloud.weight[i];
    b.sum(*a, *c) += cloud.sum[i];
  }
  return b;
}

struct KernelTaps {
  int width = 0;
  Vector k0, k1, k2;
};

KernelTaps make_taps(double h, double delta) {
  KernelTaps taps;
  taps.width = static_cast<int>(std::floor(h / delta));
  int len = 2 * taps.width + 1;
  taps.k0.resize(len);
  taps.k1.resize(len);
  taps.k2.resize(len);
  for (int d = -taps.width; d <= taps.width; ++d) {
    double u = d * delta / h;
    double k = epanechnikov(u);
    taps.k0[d + taps.width] = k;
    taps.k1[d + taps.width] = k * u;
    taps.k2[d + taps.width] = k * u * u;
  }
  return taps;
}

Matrix conv_cols(const Matrix& a, const Vector& taps, int width) {
  Index g = a.cols();
  Matrix b = Matrix::Zero(a.rows(), g);
  for (int d = -width; d <= width; ++d) {
    double k = taps[d + width];
    if (k == 0.0) continue;
    Index b0 = std::max<Index>(0, -d);
    Index b1 = std::min<Index>(g, g - d);
    if (b1 > b0) b.middleCols(b0, b1 - b0) += k * a.middleCols(b0 + d, b1 - b0);
  }
  return b;
}

Matrix conv_rows(const Matrix& a, const Vector& taps, int width) {
  Index g = a.rows();
  Matrix b = Matrix::Zero(g, a.cols());
  for (int d = -width; d <= width; ++d) {
    double k = taps[d + width];
    if (k == 0.0) continue;
    Index b0 = std::max<Index>(0, -d);
    Index b1 = std::min<Index>(g, g - d);
    if (b1 > b0) b.middleRows(b0, b1 - b0) += k * a.middleRows(b0 + d, b1 - b0);
  }
  return b;
}

// Solves the 3x3 weighted least squares system at one cell.
double solve_cell(double m00, double m10, double m01, double m20, double m11, double m02,
                  double r00, double r10, double r01, bool* empty) {
  *empty = false;
  double det = m00 * (m20 * m02 - m11 * m11) - m10 * (m10 * m02 - m11 * m01) +
               m01 * (m10 * m11 - m20 * m01);
  double scale = m00 * m00 * m00;
  if (det > 1e-10 * scale && scale > 0.0) {
    // Cramer's rule for the intercept only
    double c0 = (m20 * m02 - m11 * m11);
    double c1 = -(m10 * m02 - m11 * m01);
    double c2 = (m10 * m11 - m20 * m01);
    return (r00 * c0 + r10 * c1 + r01 * c2) / det;
  }
  if (m00 > 0.0) return r00 / m00;
  *empty = true;
  return 0.0;
}

Matrix smooth_surface_binned(const BinnedSurface& data, const Grid& grid, double h) {
  KernelTaps taps = make_taps(h, grid.spacing());
  int w = taps.width;
  Matrix d0 = conv_cols(data.weight, taps.k0, w);
  Matrix d1 = conv_cols(data.weight, taps.k1, w);
  Matrix d2 = conv_cols(data.weight, taps.k2, w);
  Matrix m00 = conv_rows(d0, taps.k0, w);
  Matrix m10 = conv_rows(d0, taps.k1, w);
  Matrix m20 = conv_rows(d0, taps.k2, w);
  Matrix m01 = conv_rows(d1, taps.k0, w);
  Matrix m11 = conv_rows(d1, taps.k1, w);
  Matrix m02 = conv_rows(d2, taps.k0, w);
  Matrix c0 = conv_cols(data.sum, taps.k0, w);
  Matrix c1 = conv_cols(data.sum, taps.k1, w);
  Matrix r00 = conv_rows(c0, taps.k0, w);
  Matrix r10 = conv_rows(c0, taps.k1, w);
  Matrix r01 = conv_rows(c1, taps.k0, w);

  Index g = grid.size();
  Matrix out(g, g);
  std::vector<std::pair<Index, Index>> empty_cells;
  for (Index a = 0; a < g; ++a) {
    for (Index b = 0; b < g; ++b) {
      bool empty = false;
      out(a, b) = solve_cell(m00(a, b), m10(a, b), m01(a, b), m20(a, b), m11(a, b), m02(a, b),
                             r00(a, b), r10(a, b), r01(a, b), &empty);
      if (empty) empty_cells.emplace_back(a, b);
    }
  }
  if (!empty_cells.empty()) {
    // nearest populated cell value
    std::vector<std::pair<Index, Index>> populated;
    for (Index a = 0; a < g; ++a) {
      for (Index b = 0; b < g; ++b) {
        if (data.weight(a, b) > 0.0) populated.emplace_back(a, b);
      }
    }
    if (populated.empty()) raise(ErrorCode::InvalidSize, "surface smoother called with no data");
    for (auto [a, b] : empty_cells) {
      double best = kInf;
      double value = 0.0;
      for (auto [i, j] : populated) {
        double da = grid.points[a] - grid.points[i];
        double db = grid.points[b] - grid.points[j];
        double dist = da * da + db * db;
        if (dist < best) {
          best = dist;
          value = data.sum(i, j) / data.weight(i, j);
        }
      }
      out(a, b) = value;
    }
  }
  return out;
}

Matrix smooth_surface_scattered(const PairCloud& cloud, const Grid& grid, double h) {
  Index g = grid.size();
  std::size_t npts = cloud.s.size();
  if (npts == 0) raise(ErrorCode::InvalidSize, "surface smoother called with no data");
  Matrix m00 = Matrix::Zero(g, g), m10 = Matrix::Zero(g, g), m01 = Matrix::Zero(g, g);
  Matrix m20 = Matrix::Zero(g, g), m11 = Matrix::Zero(g, g), m02 = Matrix::Zero(g, g);
  Matrix r00 = Matrix::Zero(g, g), r10 = Matrix::Zero(g, g), r01 = Matrix::Zero(g, g);

  const Vector& p = grid.points;
  const double* pb = p.data();
  for (std::size_t q = 0; q < npts; ++q) {
    double sv = cloud.s[q], tv = cloud.t[q], wv = cloud.weight[q], cv = cloud.sum[q];
    if (wv <= 0.0) continue;
    Index a0 = static_cast<Index>(std::lower_bound(pb, pb + g, sv - h) - pb);
    Index a1 = static_cast<Index>(std::upper_bound(pb, pb + g, sv + h) - pb);
    Index b0 = static_cast<Index>(std::lower_bound(pb, pb + g, tv - h) - pb);
    Index b1 = static_cast<Index>(std::upper_bound(pb, pb + g, tv + h) - pb);
    for (Index a = a0; a < a1; ++a) {
      double us = (sv - p[a]) / h;
      double ks = epanechnikov(us) * wv;
      if (ks <= 0.0) continue;
      for (Index b = b0; b < b1; ++b) {
        double ut = (tv - p[b]) / h;
        double k = ks * epanechnikov(ut);
        if (k <= 0.0) continue;
        double ratio = cv / wv;  // mean value at the point
        m00(a, b) += k;
        m10(a, b) += k * us;
        m01(a, b) += k * ut;
        m20(a, b) += k * us * us;
        m11(a, b) += k * us * ut;
        m02(a, b) += k * ut * ut;
        r00(a, b) += k * ratio;
        r10(a, b) += k * us * ratio;
        r01(a, b) += k * ut * ratio;
      }
    }
  }
  Matrix out(g, g);
  bool any_empty = false;
  Matrix empty_mask = Matrix::Zero(g, g);
  for (Index a = 0; a < g; ++a) {
    for (Index b = 0; b < g; ++b) {
      bool empty = false;
      out(a, b) = solve_cell(m00(a, b), m10(a, b), m01(a, b), m20(a, b), m11(a, b), m02(a, b),
                             r00(a, b), r10(a, b), r01(a, b), &empty);
      if (empty) {
        any_empty = true;
        empty_mask(a, b) = 1.0;
      }
    }
  }
  if (any_empty) {
    for (Index a = 0; a < g; ++a) {
      for (Index b = 0; b < g; ++b) {
        if (empty_mask(a, b) == 0.0) continue;
        double best = kInf;
        double value = 0.0;
        for (std::size_t q = 0; q < npts; ++q) {
          if (cloud.weight[q] <= 0.0) continue;
          double da = grid.points[a] - cloud.s[q];
          double db = grid.points[b] - cloud.t[q];
          double dist = da * da + db * db;
          if (dist < best) {
            best = dist;
            value = cloud.sum[q] / cloud.weight[q];
          }
        }
        out(a, b) = value;
      }
    }
  }
  return out;
}

double bilinear_at(const Grid& grid, const Matrix& surface, double s, double t) {
  Vector row(grid.size());
  for (Index j = 0; j < grid.size(); ++j) {
    row[j] = interp_linear(grid.points, surface.col(j), s);
  }
  return interp_linear(grid.points, row, t);
}

}  // namespace

Matrix smooth_surface(const PairCloud& cloud, const Grid& grid, double bandwidth) {
  if (bandwidth <= 0.0) raise(ErrorCode::InvalidConfig, "bandwidth must be positive");
  if (auto binned = bin_cloud(cloud, grid)) {
    return smooth_surface_binned(*binned, grid, bandwidth);
  }
  return smooth_surface_scattered(cloud, grid, bandwidth);
}

double cv_surface_bandwidth(const std::vector<PairCloud>& folds, const Grid& grid,
                            const Vector& ladder) {
  std::size_t nf = folds.size();
  std::vector<std::optional<BinnedSurface>> binned(nf);
  bool fast = true;
  for (std::size_t f = 0; f < nf; ++f) {
    binned[f] = bin_cloud(folds[f], grid);
    if (!binned[f]) fast = false;
  }
  double best_h = ladder[ladder.size() - 1];
  double best_err = kInf;
  if (fast) {
    BinnedSurface total(grid.size());
    for (std::size_t f = 0; f < nf; ++f) {
      total.weight += binned[f]->weight;
      total.sum += binned[f]->sum;
    }
    for (Index li = 0; li < ladder.size(); ++li) {
      double h = ladder[li];
      double err = 0.0;
      for (std::size_t f = 0; f < nf; ++f) {
        if (binned[f]->weight.sum() <= 0.0) continue;
        BinnedSurface train(grid.size());
        train.weight = total.weight - binned[f]->weight;
        train.sum = total.sum - binned[f]->sum;
        if (train.weight.sum() <= 0.0) continue;
        Matrix pred = smooth_surface_binned(train, grid, h);
        err += (binned[f]->weight.array() * pred.array().square() -
                2.0 * pred.array() * binned[f]->sum.array())
                   .sum();
      }
      if (err < best_err) {
        best_err = err;
        best_h = h;
      }
    }
    return best_h;
  }
  // general path: train on the other folds, predict by interpolating the
  // smoothed surface at held-out points
  for (Index li = 0; li < ladder.size(); ++li) {
    double h = ladder[li];
    double err = 0.0;
    for (std::size_t f = 0; f < nf; ++f) {
      if (folds[f].s.empty()) continue;
      PairCloud train;
      for (std::size_t g2 = 0; g2 < nf; ++g2) {
        if (g2 == f) continue;
        train.s.insert(train.s.end(), folds[g2].s.begin(), folds[g2].s.end());
        train.t.insert(train.t.end(), folds[g2].t.begin(), folds[g2].t.end());
        train.sum.insert(train.sum.end(), folds[g2].sum.begin(), folds[g2].sum.end());
        train.weight.insert(train.weight.end(), folds[g2].weight.begin(), folds[g2].weight.end());
      }
      if (train.s.empty()) continue;
      Matrix pred = smooth_surface(train, grid, h);
      for (std::size_t q = 0; q < folds[f].s.size(); ++q) {
        double v = bilinear_at(grid, pred, folds[f].s[q], folds[f].t[q]);
        err += folds[f].weight[q] * v * v - 2.0 * v * folds[f].sum[q];
      }
    }
    if (err < best_err) {
      best_err = err;
      best_h = h;
    }
  }
  return best_h;
}

}  // namespace detail

CovarianceEstimate estimate_covariance_sparse(const FunctionalDataset& data, const Grid& grid,
                                              const Vector& mean, double cov_bandwidth,
                                              double diag_bandwidth) {
  if (data.n() < 2) raise(ErrorCode::InvalidSize, "covariance needs n >= 2");
  if (mean.size() != grid.size()) raise(ErrorCode::GridMismatch, "mean length does not match grid");
  bool any_pair = false;
  for (const auto& s : data.subjects) {
    if (s.num_obs() >= 2) {
      any_pair = true;
      break;
    }
  }
  if (!any_pair)
    raise(ErrorCode::InsufficientPairs, "no subject has two or more observations");

  const int folds = static_cast<int>(std::min<Index>(10, data.n()));
  std::vector<detail::PairCloud> pair_folds(folds);
  std::vector<std::pair<double, double>> diag_points;
  std::vector<int> diag_fold;
  for (Index i = 0; i < data.n(); ++i) {
    const auto& s = data.subjects[i];
    int f = static_cast<int>(i % folds);
    Vector mu = interp_linear(grid.points, mean, s.t);
    Vector r = s.w - mu;
    for (Index j = 0; j < s.num_obs(); ++j) {
      diag_points.emplace_back(s.t[j], r[j] * r[j]);
      diag_fold.push_back(f);
      for (Index l = 0; l < s.num_obs(); ++l) {
        if (l == j) continue;
        pair_folds[f].add(s.t[j], s.t[l], r[j] * r[l]);
      }
    }
  }

  // pooled time ladder shared by the surface and diagonal selectors
  AlignedCloud diag_cloud = align_points(diag_points, diag_fold, folds);
  double h_cov = cov_bandwidth;
  if (h_cov <= 0.0) {
    Vector ladder = cloud_ladder(diag_cloud.x, 0.3);
    h_cov = detail::cv_surface_bandwidth(pair_folds, grid, ladder);
  }
  double h_diag = diag_bandwidth;
  if (h_diag <= 0.0) {
    h_diag = cv_curve_bandwidth(diag_cloud, cloud_ladder(diag_cloud.x, 0.5));
  }

  detail::PairCloud all_pairs;
  for (auto& f : pair_folds) {
    all_pairs.s.insert(all_pairs.s.end(), f.s.begin(), f.s.end());
    all_pairs.t.insert(all_pairs.t.end(), f.t.begin(), f.t.end());
    all_pairs.sum.insert(all_pairs.sum.end(), f.sum.begin(), f.sum.end());
    all_pairs.weight.insert(all_pairs.weight.end(), f.weight.begin(), f.weight.end());
  }
  Matrix g_hat = detail::smooth_surface(all_pairs, grid, h_cov);
  g_hat = 0.5 * (g_hat + g_hat.transpose()).eval();

  Vector dw = diag_cloud.total_weight();
  Vector dy = values_of(diag_cloud.total_sum(), dw);
  Vector v_hat = local_linear(diag_cloud.x, dy, dw, grid.points, h_diag);

  CovarianceEstimate cov;
  cov.grid = grid;
  cov.mean = mean;
  cov.surface = g_hat;
  cov.noise_var = std::max(0.0, grid.integrate(v_hat - g_hat.diagonal()));
  return cov;
}

}  // namespace fqr
