#pragma once

#include <vector>

#include "fqr/fpca.hpp"
#include "fqr/quantile_regression.hpp"
#include "fqr/types.hpp"

namespace fqr {

struct DensityWeights {
  Vector f;           // per-subject conditional density at the fitted quantile
  double bandwidth = 0.0;
  Index clamped = 0;  // entries where the difference quotient hit the floor
};

struct CovarianceBlocks {
  Matrix D0;
  std::vector<Matrix> D1;                // one per level
  Matrix sigma_tilde;                    // L(K+1) x L(K+1)
  std::vector<double> density_bandwidth; // h used for the difference quotient
};

struct WaldResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  Matrix R;
  Index K = 0;
  std::vector<double> levels;
  bool used_pseudo_inverse = false;
};

struct InflationCovariance {
  Matrix sigma0;     // (K+1)^2 x (K+1)^2, fourth-moment blocks
  Matrix inflation;  // L(K+1) x L(K+1), blocks Theta_l Sigma0 Theta_l'
};

struct BetaCurve {
  Grid grid;
  Vector beta;
  Vector se;
  double tau = 0.0;
};

/// R = R1 (x) R2 with R1 the (L-1) x L forward-difference matrix and
/// R2 = [0_K | I_K]; intercepts are untested.
Matrix contrast_matrix(Index num_levels, Index truncation);

Matrix estimate_D0(const ScoreMatrix& scores);

/// Hendricks-Koenker difference quotient with Hall-Sheather bandwidth.
DensityWeights density_weights(const ScoreMatrix& scores, const Vector& y, double tau);

Matrix estimate_D1(const ScoreMatrix& scores, const Vector& f);

Matrix assemble_sigma_tilde(const Matrix& D0, const std::vector<Matrix>& D1,
                            const std::vector<double>& levels);

CovarianceBlocks estimate_covariance_blocks(const ScoreMatrix& scores, const Vector& y,
                                            const std::vector<double>& levels);

WaldResult adjusted_wald(const MultiFit& multi, const Matrix& sigma_tilde, Index n);

InflationCovariance inflation_covariance(const ScoreMatrix& scores, const Vector& eigenvalues,
                                         const std::vector<Vector>& thetas,
                                         const std::vector<double>& levels);

BetaCurve beta_curve(const QuantileFit& fit, const EigenSystem& eigen, const Matrix& D0,
                     const Matrix& D1, const Matrix& inflation_block, Index n);

}  // namespace fqr
