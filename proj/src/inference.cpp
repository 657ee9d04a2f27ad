#include "fqr/inference.hpp"

#include <algorithm>
#include <cmath>

#include "fqr/stats.hpp"

namespace fqr {

Matrix contrast_matrix(Index num_levels, Index truncation) {
  if (num_levels < 2) raise(ErrorCode::InvalidConfig, "contrast needs at least 2 levels");
  if (truncation < 1) raise(ErrorCode::InvalidConfig, "contrast needs at least 1 component");
  Index l = num_levels, k = truncation;
  Matrix r = Matrix::Zero((l - 1) * k, l * (k + 1));
  for (Index block = 0; block + 1 < l; ++block) {
    for (Index row = 0; row < k; ++row) {
      r(block * k + row, block * (k + 1) + row + 1) = 1.0;
      r(block * k + row, (block + 1) * (k + 1) + row + 1) = -1.0;
    }
  }
  return r;
}

Matrix estimate_D0(const ScoreMatrix& scores) {
  Index n = scores.n();
  if (n < 1) raise(ErrorCode::InvalidSize, "empty score matrix");
  return scores.design.transpose() * scores.design / static_cast<double>(n);
}

DensityWeights density_weights(const ScoreMatrix& scores, const Vector& y, double tau) {
  Index n = scores.n();
  double h = hall_sheather_bandwidth(n, tau);
  h = std::min(h, 0.995 * std::min(tau, 1.0 - tau));
  QuantileFit hi = fit_quantile(scores, y, tau + h);
  QuantileFit lo = fit_quantile(scores, y, tau - h);
  Vector spacing = scores.design * (hi.theta - lo.theta);
  const double eps = 1e-6;
  DensityWeights out;
  out.bandwidth = h;
  out.f.resize(n);
  for (Index i = 0; i < n; ++i) {
    double d = spacing[i];
    if (d <= eps) {
      d = eps;
      ++out.clamped;
    }
    out.f[i] = 2.0 * h / d;
  }
  return out;
}

Matrix estimate_D1(const ScoreMatrix& scores, const Vector& f) {
  Index n = scores.n();
  if (f.size() != n) raise(ErrorCode::InvalidSize, "weights length does not match scores");
  for (Index i = 0; i < n; ++i) {
    if (!(f[i] > 0.0)) raise(ErrorCode::InvalidConfig, "density weights must be positive");
  }
  return scores.design.transpose() * f.asDiagonal() * scores.design / static_cast<double>(n);
}

namespace {

Matrix invert_spd(const Matrix& a, const std::string& label) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success)
    raise(ErrorCode::NumericalFailure, label + ": eigendecomposition failed");
  double lo = solver.eigenvalues()[0];
  double hi = solver.eigenvalues()[a.rows() - 1];
  if (!(lo > 0.0) || hi / lo > 1e12)
    raise(ErrorCode::NotInvertible, label + " is singular (condition number above 1e12)");
  Vector inv = solver.eigenvalues().cwiseInverse();
  return solver.eigenvectors() * inv.asDiagonal() * solver.eigenvectors().transpose();
}

}  // namespace

Matrix assemble_sigma_tilde(const Matrix& D0, const std::vector<Matrix>& D1,
                            const std::vector<double>& levels) {
  Index nlevels = static_cast<Index>(levels.size());
  if (static_cast<Index>(D1.size()) != nlevels)
    raise(ErrorCode::InvalidSize, "one D1 matrix per level required");
  Index p = D0.rows();
  std::vector<Matrix> inv(nlevels);
  for (Index l = 0; l < nlevels; ++l) {
    inv[l] = invert_spd(D1[l], "D1(tau=" + std::to_string(levels[l]) + ")");
  }
  Matrix sigma = Matrix::Zero(nlevels * p, nlevels * p);
  for (Index l = 0; l < nlevels; ++l) {
    for (Index m = 0; m < nlevels; ++m) {
      double factor = std::min(levels[l], levels[m]) - levels[l] * levels[m];
      sigma.block(l * p, m * p, p, p) = factor * inv[l] * D0 * inv[m];
    }
  }
  return 0.5 * (sigma + sigma.transpose()).eval();
}

CovarianceBlocks estimate_covariance_blocks(const ScoreMatrix& scores, const Vector& y,
                                            const std::vector<double>& levels) {
  CovarianceBlocks blocks;
  blocks.D0 = estimate_D0(scores);
  for (double tau : levels) {
    DensityWeights dw = density_weights(scores, y, tau);
    blocks.D1.push_back(estimate_D1(scores, dw.f));
    blocks.density_bandwidth.push_back(dw.bandwidth);
  }
  blocks.sigma_tilde = assemble_sigma_tilde(blocks.D0, blocks.D1, levels);
  return blocks;
}

WaldResult adjusted_wald(const MultiFit& multi, const Matrix& sigma_tilde, Index n) {
  Index nlevels = multi.num_levels();
  Index k = multi.truncation();
  if (nlevels < 2) raise(ErrorCode::InvalidConfig, "Wald test needs at least 2 levels");
  if (k < 1) raise(ErrorCode::InvalidConfig, "Wald test needs at least 1 component");
  WaldResult out;
  out.K = k;
  out.levels = multi.levels;
  out.R = contrast_matrix(nlevels, k);
  Vector v = out.R * multi.zeta;
  Matrix m = out.R * sigma_tilde * out.R.transpose();
  m = 0.5 * (m + m.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  if (solver.info() != Eigen::Success)
    raise(ErrorCode::NumericalFailure, "contrast covariance eigendecomposition failed");
  double hi = solver.eigenvalues()[m.rows() - 1];
  double lo = solver.eigenvalues()[0];
  Index rank = 0;
  double quad = 0.0;
  if (lo > 0.0 && hi / lo <= 1e12) {
    rank = m.rows();
    quad = v.dot(solver.eigenvectors() *
                 solver.eigenvalues().cwiseInverse().asDiagonal() *
                 solver.eigenvectors().transpose() * v);
  } else {
    // Moore-Penrose fallback with the degrees of freedom cut to the rank
    out.used_pseudo_inverse = true;
    double cutoff = hi > 0.0 ? hi * 1e-12 : 0.0;
    Vector inv = Vector::Zero(m.rows());
    for (Index i = 0; i < m.rows(); ++i) {
      if (solver.eigenvalues()[i] > cutoff && solver.eigenvalues()[i] > 0.0) {
        inv[i] = 1.0 / solver.eigenvalues()[i];
        ++rank;
      }
    }
    if (rank == 0)
      raise(ErrorCode::SingularContrastCovariance, "contrast covariance has numerical rank 0");
    quad = v.dot(solver.eigenvectors() * inv.asDiagonal() * solver.eigenvectors().transpose() * v);
  }
  out.statistic = std::max(0.0, static_cast<double>(n) * quad);
  out.df = static_cast<int>(rank);
  out.p_value = chi_square_upper_tail(out.df, out.statistic);
  return out;
}

InflationCovariance inflation_covariance(const ScoreMatrix& scores, const Vector& eigenvalues,
                                         const std::vector<Vector>& thetas,
                                         const std::vector<double>& levels) {
  Index k = eigenvalues.size();
  Index p = k + 1;
  Index nlevels = static_cast<Index>(levels.size());
  if (static_cast<Index>(thetas.size()) != nlevels)
    raise(ErrorCode::InvalidSize, "one theta vector per level required");
  if (scores.truncation() != k)
    raise(ErrorCode::InvalidSize, "score truncation does not match eigenvalues");
  for (Index a = 0; a < k; ++a) {
    for (Index b = a + 1; b < k; ++b) {
      if (std::abs(eigenvalues[a] - eigenvalues[b]) <= 1e-8)
        raise(ErrorCode::EigenvalueGapTooSmall, "eigenvalue gap below 1e-8");
    }
  }

  Index n = scores.n();
  const Matrix& xi = scores.design;  // column 0 is the intercept
  // sample fourth moments of the score columns
  auto moment = [&](Index a, Index b, Index c, Index d) {
    return (xi.col(a).array() * xi.col(b).array() * xi.col(c).array() * xi.col(d).array())
               .sum() / static_cast<double>(n);
  };

  InflationCovariance out;
  out.sigma0 = Matrix::Zero(p * p, p * p);
  for (Index bk = 1; bk <= k; ++bk) {
    for (Index bk2 = 1; bk2 <= k; ++bk2) {
      for (Index j = 1; j <= k; ++j) {
        if (j == bk) continue;
        for (Index j2 = 1; j2 <= k; ++j2) {
          if (j2 == bk2) continue;
          double factor = 1.0 / ((eigenvalues[bk - 1] - eigenvalues[j - 1]) *
                                 (eigenvalues[bk2 - 1] - eigenvalues[j2 - 1]));
          out.sigma0(bk * p + j, bk2 * p + j2) = factor * moment(bk, j, bk2, j2);
        }
      }
    }
  }

  out.inflation = Matrix::Zero(nlevels * p, nlevels * p);
  for (Index l = 0; l < nlevels; ++l) {
    for (Index m = 0; m < nlevels; ++m) {
      Matrix block(p, p);
      for (Index a = 0; a < p; ++a) {
        for (Index b = 0; b < p; ++b) {
          block(a, b) =
              thetas[l].dot(out.sigma0.block(a * p, b * p, p, p) * thetas[m]);
        }
      }
      out.inflation.block(l * p, m * p, p, p) = block;
    }
  }
  return out;
}

BetaCurve beta_curve(const QuantileFit& fit, const EigenSystem& eigen, const Matrix& D0,
                     const Matrix& D1, const Matrix& inflation_block, Index n) {
  Index k = eigen.truncation();
  if (fit.theta.size() != k + 1)
    raise(ErrorCode::InvalidSize, "fit truncation does not match eigensystem");
  Matrix d1_inv = invert_spd(D1, "D1");
  Matrix sandwich = fit.tau * (1.0 - fit.tau) * d1_inv * D0 * d1_inv;

  BetaCurve out;
  out.grid = eigen.grid;
  out.tau = fit.tau;
  out.beta = eigen.eigenfunctions * fit.slope();
  out.se.resize(eigen.grid.size());
  for (Index g = 0; g < eigen.grid.size(); ++g) {
    Vector a(k + 1);
    a[0] = 1.0;
    a.tail(k) = eigen.eigenfunctions.row(g).transpose();
    double v = a.dot(sandwich * a) + a.dot(inflation_block * a);
    out.se[g] = std::sqrt(std::max(0.0, v) / static_cast<double>(n));
  }
  return out;
}

}  // namespace fqr
