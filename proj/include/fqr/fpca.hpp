#pragma once

#include "fqr/smoothing.hpp"

namespace fqr {

/// Full spectrum of the quadrature-discretized covariance operator.
/// Eigenfunctions are orthonormal in the weighted inner product and
/// sign-normalized; negative eigenvalues are clipped to zero.
struct Spectrum {
  Vector eigenvalues;      // nonincreasing, >= 0
  Matrix eigenfunctions;   // grid-size x grid-size, column k pairs with eigenvalues[k]
};

/// Truncated eigensystem driving score estimation and the regression design.
struct EigenSystem {
  Grid grid;
  Vector eigenvalues;      // strictly positive, nonincreasing, length K
  Matrix eigenfunctions;   // grid-size x K
  Vector mean;
  double noise_var = 0.0;
  double pve_achieved = 0.0;

  Index truncation() const { return eigenvalues.size(); }
};

/// n x (K+1) regression design: leading intercept column of ones, then the
/// estimated fPC scores.
struct ScoreMatrix {
  Matrix design;

  Index n() const { return design.rows(); }
  Index truncation() const { return design.cols() - 1; }
};

Spectrum eigendecompose(const CovarianceEstimate& cov);

/// Smallest K whose cumulative eigenvalue fraction reaches pve; positive
/// eigenvalues only.
Index select_truncation(const Vector& eigenvalues, double pve);

EigenSystem make_eigensystem(const CovarianceEstimate& cov, const Spectrum& spectrum, Index K);

/// eigendecompose + select_truncation + make_eigensystem.
EigenSystem fit_eigensystem(const CovarianceEstimate& cov, double pve);

/// Scores by quadrature of the centered reconstructed trajectories.
ScoreMatrix scores_quadrature(const SmoothedCurves& curves, const EigenSystem& eigen);

/// Scores by conditional expectation given the sparse noisy observations
/// (Gaussian best linear prediction).
ScoreMatrix scores_conditional(const FunctionalDataset& data, const EigenSystem& eigen);

}  // namespace fqr
