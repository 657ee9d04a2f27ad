#pragma once

#include "fqr/dataset.hpp"
#include "fqr/grid.hpp"
#include "fqr/types.hpp"

namespace fqr {

/// Reconstructed trajectories X̂_i evaluated on a grid.
struct SmoothedCurves {
  Grid grid;
  Matrix curves;  // n x grid-size
  double bandwidth = 0.0;
  double mean_residual_var = 0.0;  // average residual mean square at the observation points
};

/// Mean curve, covariance surface and measurement-noise variance.
struct CovarianceEstimate {
  Grid grid;
  Vector mean;
  Matrix surface;  // symmetric, grid-size x grid-size
  double noise_var = 0.0;
};

inline double epanechnikov(double u) {
  double a = 1.0 - u * u;
  return a > 0.0 ? 0.75 * a : 0.0;
}

/// Local linear smoother with Epanechnikov kernel over scattered points
/// (x, y) with multiplicity weights w, evaluated at `eval`. Windows with a
/// degenerate local design fall back to a local constant fit and, when the
/// window is empty, to the nearest observation.
Vector local_linear(const Vector& x, const Vector& y, const Vector& w, const Vector& eval,
                    double bandwidth);

/// Equivalent-weights matrix A with A.row(e) such that fit(e) = A.row(e) * y.
Matrix local_linear_matrix(const Vector& x, const Vector& eval, double bandwidth);

/// Log-spaced bandwidth ladder.
Vector bandwidth_ladder(double lo, double hi, int count = 10);

Vector smooth_trajectory(const SubjectRecord& subject, const Grid& grid, double bandwidth);

/// Per-trajectory bandwidth by generalized cross-validation on a pilot set of
/// subjects, searched over a log-spaced ladder.
double gcv_trajectory_bandwidth(const FunctionalDataset& data, Index pilot_cap = 50);

/// Smooths every trajectory onto the grid; bandwidth <= 0 selects by GCV.
SmoothedCurves smooth_trajectories(const FunctionalDataset& data, const Grid& grid,
                                   double bandwidth = 0.0);

/// Local linear fit of the pooled (t_ij, W_ij) cloud.
Vector pooled_mean(const FunctionalDataset& data, const Grid& grid, double bandwidth);

double cv_pooled_mean_bandwidth(const FunctionalDataset& data, const Grid& grid, int folds = 10);

/// Mean function estimate. Dense design: pointwise average of smoothed
/// trajectories. Sparse design: pooled local linear smoother.
Vector estimate_mean(const FunctionalDataset& data, const Grid& grid, double bandwidth,
                     Design design);

/// Sample covariance of reconstructed trajectories around the given mean.
CovarianceEstimate estimate_covariance_dense(const SmoothedCurves& curves, const Vector& mean);

/// Covariance via bivariate smoothing of off-diagonal raw cross-products,
/// with sigma^2 recovered from the separately smoothed diagonal.
/// Bandwidths <= 0 are selected by 10-fold cross-validation.
CovarianceEstimate estimate_covariance_sparse(const FunctionalDataset& data, const Grid& grid,
                                              const Vector& mean, double cov_bandwidth = 0.0,
                                              double diag_bandwidth = 0.0);

namespace detail {

/// Raw covariance cross-products aggregated per coordinate pair.
struct PairCloud {
  std::vector<double> s, t, sum, weight;
  void add(double si, double ti, double value, double w = 1.0) {
    s.push_back(si);
    t.push_back(ti);
    sum.push_back(value * w);
    weight.push_back(w);
  }
};

/// Bivariate local linear smoothing of a pair cloud onto grid x grid with a
/// product Epanechnikov kernel. Uses separable convolutions when every
/// coordinate sits on the grid.
Matrix smooth_surface(const PairCloud& cloud, const Grid& grid, double bandwidth);

double cv_surface_bandwidth(const std::vector<PairCloud>& folds, const Grid& grid,
                            const Vector& ladder);

}  // namespace detail

}  // namespace fqr
