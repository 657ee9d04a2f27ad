#include "fqr/quantile_regression.hpp"

#include <algorithm>
#include <cmath>

namespace fqr {

double pinball_objective(const Vector& residuals, double tau) {
  double obj = 0.0;
  for (Index i = 0; i < residuals.size(); ++i) obj += pinball_loss(residuals[i], tau);
  return obj;
}

void check_design_rank(const Matrix& design) {
  Matrix gram = design.transpose() * design;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(gram);
  if (solver.info() != Eigen::Success)
    raise(ErrorCode::NumericalFailure, "Gram eigendecomposition failed");
  double lo = solver.eigenvalues()[0];
  double hi = solver.eigenvalues()[gram.rows() - 1];
  if (!(lo > 0.0) || hi / lo > 1e12) {
    raise(ErrorCode::RankDeficientDesign,
          "design Gram condition number exceeds 1e12 (columns nearly collinear)");
  }
}

namespace {

// Step length keeping v + f*dv positive, damped by beta.
double step_length(const Vector& v, const Vector& dv, double beta) {
  double f = 1.0;
  for (Index i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) f = std::min(f, -beta * v[i] / dv[i]);
  }
  return std::min(f, 1.0);
}

}  // namespace

Vector fit_pinball(const Matrix& design, const Vector& y, const Vector& taus, int* iterations,
                   bool* converged, int max_iterations, double tol) {
  const Index n = design.rows();
  if (y.size() != n || taus.size() != n)
    raise(ErrorCode::InvalidSize, "fit_pinball: dimension mismatch");
  for (Index i = 0; i < n; ++i) {
    if (!(taus[i] > 0.0 && taus[i] < 1.0))
      raise(ErrorCode::InvalidConfig, "quantile level must lie in (0,1)");
  }

  const double beta = 0.9995;
  Vector c = -y;

  // primal-dual start: x interior and equality-feasible by construction
  Vector x = Vector::Ones(n) - taus;
  Vector s = taus;  // slack to the upper bound 1
  Vector b = design.transpose() * x;

  Vector lambda = (design.transpose() * design).ldlt().solve(design.transpose() * c);
  Vector r = c - design * lambda;
  // strictly interior split keeping z - w = r, so the dual residual stays zero
  double interior = 1e-6 * (1.0 + r.cwiseAbs().maxCoeff());
  Vector z = r.cwiseMax(0.0).array() + interior;
  Vector w = z - r;
  // absolute gap target, with a relative floor for large problem scales
  auto gap_target = [&](double objective) {
    return std::max(tol, 1e-12 * (1.0 + std::abs(objective)));
  };
  double gap = c.dot(x) - b.dot(lambda) + w.sum();

  int it = 0;
  while (gap > gap_target(c.dot(x)) && it < max_iterations) {
    ++it;
    Vector q(n);
    for (Index i = 0; i < n; ++i) q[i] = 1.0 / (z[i] / x[i] + w[i] / s[i]);
    r = z - w;

    Matrix weighted = design;
    for (Index i = 0; i < n; ++i) weighted.row(i) *= q[i];
    Matrix normal = design.transpose() * weighted;  // X' Q X
    Eigen::LDLT<Matrix> normal_ldlt(normal);
    if (normal_ldlt.info() != Eigen::Success)
      raise(ErrorCode::NumericalFailure, "interior point normal equations failed");

    Vector dlambda = normal_ldlt.solve(design.transpose() * (q.asDiagonal() * r));
    Vector dx = q.asDiagonal() * (design * dlambda - r);
    Vector ds = -dx;
    Vector dz(n), dw(n);
    for (Index i = 0; i < n; ++i) {
      dz[i] = -z[i] * (1.0 + dx[i] / x[i]);
      dw[i] = -w[i] * (1.0 + ds[i] / s[i]);
    }

    double fp = std::min(step_length(x, dx, beta), step_length(s, ds, beta));
    double fd = std::min(step_length(z, dz, beta), step_length(w, dw, beta));

    if (std::min(fp, fd) < 1.0) {
      // Mehrotra corrector reusing the factorization
      double mu = x.dot(z) + s.dot(w);
      double g = (x + fp * dx).dot(z + fd * dz) + (s + fp * ds).dot(w + fd * dw);
      double sigma_mu = mu * std::pow(g / mu, 3) / (2.0 * static_cast<double>(n));

      Vector dxdz = dx.cwiseProduct(dz);
      Vector dsdw = ds.cwiseProduct(dw);
      Vector rhs(n);
      for (Index i = 0; i < n; ++i) {
        rhs[i] = r[i] - sigma_mu * (1.0 / x[i] - 1.0 / s[i]) + dxdz[i] / x[i] - dsdw[i] / s[i];
      }
      dlambda = normal_ldlt.solve(design.transpose() * (q.asDiagonal() * rhs));
      dx = q.asDiagonal() * (design * dlambda - rhs);
      ds = -dx;
      for (Index i = 0; i < n; ++i) {
        dz[i] = (sigma_mu - dxdz[i]) / x[i] - z[i] - z[i] * dx[i] / x[i];
        dw[i] = (sigma_mu - dsdw[i]) / s[i] - w[i] - w[i] * ds[i] / s[i];
      }
      fp = std::min(step_length(x, dx, beta), step_length(s, ds, beta));
      fd = std::min(step_length(z, dz, beta), step_length(w, dw, beta));
    }

    x += fp * dx;
    s += fp * ds;
    lambda += fd * dlambda;
    z += fd * dz;
    w += fd * dw;
    gap = c.dot(x) - b.dot(lambda) + w.sum();
  }

  if (iterations) *iterations = it;
  bool ok = gap <= gap_target(c.dot(x));
  if (converged) *converged = ok;
  if (!ok && gap > 1e-4 * (1.0 + std::abs(c.dot(x)))) {
    raise(ErrorCode::NoConvergence,
          "interior point stalled after " + std::to_string(it) + " iterations");
  }
  return -lambda;
}

QuantileFit fit_quantile(const ScoreMatrix& design, const Vector& y, double tau) {
  const Matrix& x = design.design;
  if (!(tau > 0.0 && tau < 1.0)) raise(ErrorCode::InvalidConfig, "tau must lie in (0,1)");
  if (x.rows() != y.size()) raise(ErrorCode::InvalidSize, "design/response mismatch");
  if (x.rows() <= x.cols())
    raise(ErrorCode::InvalidSize, "need more observations than parameters");
  check_design_rank(x);
  QuantileFit fit;
  fit.tau = tau;
  Vector taus = Vector::Constant(x.rows(), tau);
  fit.theta = fit_pinball(x, y, taus, &fit.iterations, &fit.converged);
  fit.residuals = y - x * fit.theta;
  return fit;
}

MultiFit fit_multi(const ScoreMatrix& design, const Vector& y,
                   const std::vector<double>& levels) {
  if (levels.empty()) raise(ErrorCode::InvalidConfig, "no quantile levels given");
  for (std::size_t l = 1; l < levels.size(); ++l) {
    if (!(levels[l] > levels[l - 1]))
      raise(ErrorCode::InvalidConfig, "quantile levels must be strictly ascending");
  }
  MultiFit multi;
  multi.levels = levels;
  Index p = design.design.cols();
  multi.zeta.resize(static_cast<Index>(levels.size()) * p);
  for (std::size_t l = 0; l < levels.size(); ++l) {
    try {
      multi.fits.push_back(fit_quantile(design, y, levels[l]));
    } catch (const Error& e) {
      throw Error(e.code(), "level tau=" + std::to_string(levels[l]) + ": " + e.what());
    }
    multi.zeta.segment(static_cast<Index>(l) * p, p) = multi.fits.back().theta;
  }
  return multi;
}

namespace {

Vector normalize_weights(Vector weights, Index levels) {
  if (weights.size() == 0) weights = Vector::Constant(levels, 1.0 / static_cast<double>(levels));
  if (weights.size() != levels)
    raise(ErrorCode::InvalidConfig, "weights length does not match levels");
  double total = 0.0;
  for (Index l = 0; l < levels; ++l) {
    if (weights[l] < 0.0) raise(ErrorCode::InvalidConfig, "weights must be nonnegative");
    total += weights[l];
  }
  if (total <= 0.0) raise(ErrorCode::InvalidConfig, "weights sum to zero");
  return weights / total;
}

}  // namespace

CompositeFit fit_qae(const MultiFit& multi, Vector weights) {
  Index nlevels = multi.num_levels();
  for (const auto& fit : multi.fits) {
    if (!fit.converged)
      raise(ErrorCode::NoConvergence, "QAE requires all per-level fits to have converged");
  }
  CompositeFit out;
  out.levels = multi.levels;
  out.method = CompositeMethod::QAE;
  out.weights = normalize_weights(std::move(weights), nlevels);
  Index k = multi.truncation();
  out.shared_slope = Vector::Zero(k);
  out.intercepts.resize(nlevels);
  for (Index l = 0; l < nlevels; ++l) {
    out.shared_slope += out.weights[l] * multi.fits[l].slope();
    out.intercepts[l] = multi.fits[l].theta[0];
  }
  return out;
}

CompositeFit fit_crq(const ScoreMatrix& design, const Vector& y,
                     const std::vector<double>& levels, Vector weights) {
  const Matrix& x = design.design;
  Index n = x.rows();
  Index k = design.truncation();
  Index nlevels = static_cast<Index>(levels.size());
  if (nlevels == 0) raise(ErrorCode::InvalidConfig, "no quantile levels given");
  Vector w = normalize_weights(std::move(weights), nlevels);

  // One LP over per-level intercepts and a shared slope; level weights enter
  // by scaling rows (the pinball loss is positively homogeneous).
  Matrix big = Matrix::Zero(n * nlevels, nlevels + k);
  Vector big_y(n * nlevels), big_tau(n * nlevels);
  for (Index l = 0; l < nlevels; ++l) {
    if (!(levels[l] > 0.0 && levels[l] < 1.0))
      raise(ErrorCode::InvalidConfig, "tau must lie in (0,1)");
    double wl = w[l];
    if (wl == 0.0) wl = 1e-12;  // keep the level's intercept identifiable
    big.block(l * n, l, n, 1).setConstant(wl);
    big.block(l * n, nlevels, n, k) = wl * x.rightCols(k);
    big_y.segment(l * n, n) = wl * y;
    big_tau.segment(l * n, n).setConstant(levels[l]);
  }
  check_design_rank(big);
  int iterations = 0;
  bool converged = false;
  Vector coef = fit_pinball(big, big_y, big_tau, &iterations, &converged);

  CompositeFit out;
  out.levels = levels;
  out.method = CompositeMethod::CRQ;
  out.weights = w;
  out.intercepts = coef.head(nlevels);
  out.shared_slope = coef.tail(k);
  return out;
}

double prediction_error(const Vector& theta, const ScoreMatrix& design, const Vector& y,
                        double tau) {
  if (theta.size() != design.design.cols())
    raise(ErrorCode::InvalidSize, "theta length does not match design");
  Vector residuals = y - design.design * theta;
  return pinball_objective(residuals, tau);
}

Index count_interpolated(const QuantileFit& fit, double tol) {
  Index count = 0;
  for (Index i = 0; i < fit.residuals.size(); ++i) {
    if (std::abs(fit.residuals[i]) <= tol) ++count;
  }
  return count;
}

Index count_quantile_crossings(const MultiFit& multi, const ScoreMatrix& design) {
  Index count = 0;
  for (std::size_t l = 0; l + 1 < multi.fits.size(); ++l) {
    Vector lo = design.design * multi.fits[l].theta;
    Vector hi = design.design * multi.fits[l + 1].theta;
    for (Index i = 0; i < lo.size(); ++i) {
      if (lo[i] > hi[i]) ++count;
    }
  }
  return count;
}

}  // namespace fqr
