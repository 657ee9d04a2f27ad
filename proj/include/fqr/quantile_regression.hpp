#pragma once

#include <vector>

#include "fqr/fpca.hpp"
#include "fqr/types.hpp"

namespace fqr {

struct QuantileFit {
  double tau = 0.0;
  Vector theta;      // (intercept, slopes...)
  Vector residuals;  // y - design * theta
  int iterations = 0;
  bool converged = false;

  Vector slope() const { return theta.tail(theta.size() - 1); }
};

struct MultiFit {
  std::vector<double> levels;
  std::vector<QuantileFit> fits;
  Vector zeta;  // stacked theta vectors in level order

  Index num_levels() const { return static_cast<Index>(levels.size()); }
  Index truncation() const { return fits.empty() ? 0 : fits[0].theta.size() - 1; }
};

enum class CompositeMethod { QAE, CRQ };

struct CompositeFit {
  std::vector<double> levels;
  Vector shared_slope;
  Vector intercepts;  // one per level
  CompositeMethod method = CompositeMethod::QAE;
  Vector weights;

  Vector theta_at(Index level) const {
    Vector th(shared_slope.size() + 1);
    th[0] = intercepts[level];
    th.tail(shared_slope.size()) = shared_slope;
    return th;
  }
};

inline double pinball_loss(double u, double tau) {
  return u * (tau - (u < 0.0 ? 1.0 : 0.0));
}

double pinball_objective(const Vector& residuals, double tau);

/// Raises RankDeficientDesign when the Gram condition number exceeds 1e12.
void check_design_rank(const Matrix& design);

/// Pinball-loss linear fit via a Frisch-Newton primal-dual interior point on
/// the LP formulation; taus may vary per row (used by the composite fit).
Vector fit_pinball(const Matrix& design, const Vector& y, const Vector& taus, int* iterations,
                   bool* converged, int max_iterations = 100, double tol = 1e-8);

QuantileFit fit_quantile(const ScoreMatrix& design, const Vector& y, double tau);

MultiFit fit_multi(const ScoreMatrix& design, const Vector& y, const std::vector<double>& levels);

/// Weighted average of the per-level slope blocks; intercepts kept per level.
CompositeFit fit_qae(const MultiFit& multi, Vector weights = Vector());

/// Joint minimization over per-level intercepts and one shared slope.
CompositeFit fit_crq(const ScoreMatrix& design, const Vector& y,
                     const std::vector<double>& levels, Vector weights = Vector());

/// Out-of-sample pinball loss, summed over the given subjects.
double prediction_error(const Vector& theta, const ScoreMatrix& design, const Vector& y,
                        double tau);

/// Diagnostic: observations fitted exactly (at a vertex solution this is at
/// most K+1).
Index count_interpolated(const QuantileFit& fit, double tol = 1e-7);

/// Diagnostic: sample points whose fitted quantiles invert between adjacent
/// levels. Crossing is a known finite-sample artifact and is not an error.
Index count_quantile_crossings(const MultiFit& multi, const ScoreMatrix& design);

}  // namespace fqr
