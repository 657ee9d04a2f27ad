#include "fqr/fpca.hpp"

#include <algorithm>
#include <cmath>

namespace fqr {

Spectrum eigendecompose(const CovarianceEstimate& cov) {
  const Grid& grid = cov.grid;
  Index g = grid.size();
  Vector sqrt_w = grid.weights.cwiseSqrt();
  Matrix b = sqrt_w.asDiagonal() * cov.surface * sqrt_w.asDiagonal();
  b = 0.5 * (b + b.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(b);
  if (solver.info() != Eigen::Success)
    raise(ErrorCode::NumericalFailure, "covariance eigendecomposition did not converge");

  Spectrum spectrum;
  spectrum.eigenvalues.resize(g);
  spectrum.eigenfunctions.resize(g, g);
  Vector inv_sqrt_w = sqrt_w.cwiseInverse();
  // Eigen returns ascending order; flip to nonincreasing.
  for (Index k = 0; k < g; ++k) {
    Index src = g - 1 - k;
    spectrum.eigenvalues[k] = std::max(0.0, solver.eigenvalues()[src]);
    Vector phi = inv_sqrt_w.asDiagonal() * solver.eigenvectors().col(src);
    // sign convention: positive at the argmax of |phi|, ties to the smallest index
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < g; ++i) {
      double a = std::abs(phi[i]);
      if (a > best + 1e-15) {
        best = a;
        arg = i;
      }
    }
    if (phi[arg] < 0.0) phi = -phi;
    spectrum.eigenfunctions.col(k) = phi;
  }
  return spectrum;
}

Index select_truncation(const Vector& eigenvalues, double pve) {
  if (!(pve > 0.0 && pve <= 1.0)) raise(ErrorCode::InvalidConfig, "pve must be in (0,1]");
  double total = 0.0;
  Index positive = 0;
  for (Index k = 0; k < eigenvalues.size(); ++k) {
    if (eigenvalues[k] > 0.0) {
      total += eigenvalues[k];
      ++positive;
    }
  }
  if (positive == 0 || total <= 0.0)
    raise(ErrorCode::AllZeroSpectrum, "no positive eigenvalues");
  double cum = 0.0;
  for (Index k = 0; k < positive; ++k) {
    cum += eigenvalues[k];
    if (cum >= pve * total - 1e-12 * total) return k + 1;
  }
  return positive;
}

EigenSystem make_eigensystem(const CovarianceEstimate& cov, const Spectrum& spectrum, Index K) {
  double total = 0.0;
  for (Index k = 0; k < spectrum.eigenvalues.size(); ++k) total += spectrum.eigenvalues[k];
  Index positive = 0;
  while (positive < spectrum.eigenvalues.size() && spectrum.eigenvalues[positive] > 0.0)
    ++positive;
  if (K < 1 || K > positive) raise(ErrorCode::InvalidConfig, "truncation outside positive spectrum");
  EigenSystem eigen;
  eigen.grid = cov.grid;
  eigen.eigenvalues = spectrum.eigenvalues.head(K);
  eigen.eigenfunctions = spectrum.eigenfunctions.leftCols(K);
  eigen.mean = cov.mean;
  eigen.noise_var = cov.noise_var;
  eigen.pve_achieved = total > 0.0 ? eigen.eigenvalues.sum() / total : 0.0;
  return eigen;
}

EigenSystem fit_eigensystem(const CovarianceEstimate& cov, double pve) {
  Spectrum spectrum = eigendecompose(cov);
  Index k = select_truncation(spectrum.eigenvalues, pve);
  return make_eigensystem(cov, spectrum, k);
}

ScoreMatrix scores_quadrature(const SmoothedCurves& curves, const EigenSystem& eigen) {
  if (!same_grid(curves.grid, eigen.grid))
    raise(ErrorCode::GridMismatch, "curves and eigensystem use different grids");
  Index n = curves.curves.rows();
  Index k = eigen.truncation();
  Matrix centered = curves.curves.rowwise() - eigen.mean.transpose();
  Matrix weighted_phi = eigen.grid.weights.asDiagonal() * eigen.eigenfunctions;
  ScoreMatrix scores;
  scores.design.resize(n, k + 1);
  scores.design.col(0).setOnes();
  scores.design.rightCols(k) = centered * weighted_phi;
  return scores;
}

ScoreMatrix scores_conditional(const FunctionalDataset& data, const EigenSystem& eigen) {
  Index n = data.n();
  Index k = eigen.truncation();
  const Vector& lambda = eigen.eigenvalues;
  ScoreMatrix scores;
  scores.design.resize(n, k + 1);
  scores.design.col(0).setOnes();
  for (Index i = 0; i < n; ++i) {
    const auto& s = data.subjects[i];
    Index m = s.num_obs();
    Matrix phi(m, k);
    for (Index c = 0; c < k; ++c) {
      phi.col(c) = interp_linear(eigen.grid.points, eigen.eigenfunctions.col(c), s.t);
    }
    Vector mu = interp_linear(eigen.grid.points, eigen.mean, s.t);
    Vector centered = s.w - mu;
    Matrix sigma = phi * lambda.asDiagonal() * phi.transpose();
    sigma.diagonal().array() += eigen.noise_var;

    auto solve_ok = [&](const Matrix& a, Vector& x) {
      Eigen::LDLT<Matrix> ldlt(a);
      if (ldlt.info() != Eigen::Success) return false;
      x = ldlt.solve(centered);
      double denom = centered.norm();
      if (denom == 0.0) return true;
      return (a * x - centered).norm() <= 1e-6 * denom;
    };

    Vector x;
    if (!solve_ok(sigma, x)) {
      Matrix ridged = sigma;
      ridged.diagonal().array() += 1e-8 * sigma.trace() / static_cast<double>(m);
      if (!solve_ok(ridged, x)) {
        raise(ErrorCode::SingularConditioning,
              "subject " + std::to_string(s.id) + ": conditioning system is singular");
      }
    }
    scores.design.row(i).tail(k) = (lambda.asDiagonal() * phi.transpose() * x).transpose();
  }
  return scores;
}

}  // namespace fqr
