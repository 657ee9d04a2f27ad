#include <cmath>

#include "doctest.h"
#include "fqr/rng.hpp"
#include "fqr/simulation.hpp"
#include "fqr/smoothing.hpp"
#include "support/oracles.hpp"

using namespace fqr;

namespace {

FunctionalDataset constant_curves(const std::vector<double>& values, Index m) {
  std::vector<SubjectRecord> subjects(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    subjects[i].id = static_cast<std::int64_t>(i + 1);
    subjects[i].t = Vector::LinSpaced(m, 0.0, 1.0);
    subjects[i].w = Vector::Constant(m, values[i]);
  }
  return make_dataset(std::move(subjects), Vector::Zero(static_cast<Index>(values.size())));
}

}  // namespace

TEST_CASE("local linear reproduces lines for any covering bandwidth") {
  Grid grid = make_grid(51);
  SubjectRecord s;
  s.t = Vector::LinSpaced(40, 0.0, 1.0);
  s.w = 2.0 * s.t.array() + 1.0;
  for (double h : {0.06, 0.2, 0.45, 1.0}) {
    Vector curve = smooth_trajectory(s, grid, h);
    Vector truth = 2.0 * grid.points.array() + 1.0;
    CHECK((curve - truth).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("single cluster of identical observations gives a constant curve") {
  Grid grid = make_grid(21);
  SubjectRecord s;
  s.t = Vector::Constant(4, 0.3);
  s.w = Vector::Constant(4, 5.0);
  Vector curve = smooth_trajectory(s, grid, 0.1);
  CHECK((curve.array() - 5.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("oracle ISE comparison on a noisy sinusoid") {
  Rng rng(99);
  Index m = 200;
  SubjectRecord s;
  s.t = Vector::LinSpaced(m, 0.0, 1.0);
  s.w.resize(m);
  for (Index j = 0; j < m; ++j) {
    s.w[j] = std::sin(2.0 * M_PI * s.t[j]) + 0.3 * rng.normal();
  }
  Grid dense = make_grid(201);
  Vector truth(dense.size());
  for (Index g = 0; g < dense.size(); ++g) truth[g] = std::sin(2.0 * M_PI * dense.points[g]);

  Vector rough = smooth_trajectory(s, dense, 0.05);
  Vector oversmoothed = smooth_trajectory(s, dense, 0.45);
  double ise_rough = oracles::curve_ise(dense.points, rough, truth);
  double ise_over = oracles::curve_ise(dense.points, oversmoothed, truth);
  // 0.45 flattens the sinusoid; the oracle prefers the small bandwidth
  CHECK(ise_rough < ise_over);
}

TEST_CASE("estimate_mean on constant curves") {
  Grid grid = make_grid(31);
  FunctionalDataset same = constant_curves({3.0, 3.0, 3.0, 3.0}, 20);
  Vector mu = estimate_mean(same, grid, 0.2, Design::Dense);
  CHECK((mu.array() - 3.0).abs().maxCoeff() < 1e-10);

  FunctionalDataset opposite = constant_curves({2.5, -2.5}, 20);
  Vector mu0 = estimate_mean(opposite, grid, 0.2, Design::Dense);
  CHECK(mu0.cwiseAbs().maxCoeff() < 1e-10);

  Vector mu_sparse = estimate_mean(same, grid, 0.2, Design::Sparse);
  CHECK((mu_sparse.array() - 3.0).abs().maxCoeff() < 1e-10);
}

TEST_CASE("mean of the seeded zero-mean process stays small") {
  SimConfig config;
  config.n = 500;
  config.design = SimDesign::Dense;
  config.sigma = 1.0;
  config.gamma = 0.0;
  config.seed = 2024;
  GeneratedData gd = generate_dataset(config, 0);
  Grid grid = make_grid(101);
  Vector mu = estimate_mean(gd.data, grid, 0.0, Design::Dense);
  CHECK(mu.cwiseAbs().maxCoeff() < 0.2);
}

TEST_CASE("two-point covariance identity") {
  Grid grid = make_grid(41);
  Vector phi(grid.size());
  for (Index g = 0; g < grid.size(); ++g) phi[g] = std::cos(M_PI * grid.points[g]);
  SmoothedCurves curves;
  curves.grid = grid;
  curves.curves.resize(2, grid.size());
  curves.curves.row(0) = phi.transpose();
  curves.curves.row(1) = -phi.transpose();
  curves.bandwidth = 0.1;
  Vector mean = curves.curves.colwise().mean().transpose();
  CHECK(mean.cwiseAbs().maxCoeff() < 1e-14);
  CovarianceEstimate cov = estimate_covariance_dense(curves, mean);
  Matrix expected = phi * phi.transpose();
  CHECK((cov.surface - expected).cwiseAbs().maxCoeff() < 1e-12);

  // identical curves: zero covariance
  curves.curves.row(1) = phi.transpose();
  mean = curves.curves.colwise().mean().transpose();
  CovarianceEstimate zero_cov = estimate_covariance_dense(curves, mean);
  CHECK(zero_cov.surface.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dense covariance recovers the generator covariance") {
  SimConfig config;
  config.n = 2000;
  config.design = SimDesign::Dense;
  config.sigma = 0.05;
  config.seed = 31;
  GeneratedData gd = generate_dataset(config, 0);
  Grid grid = make_grid(101);
  SmoothedCurves curves = smooth_trajectories(gd.data, grid);
  Vector mean = curves.curves.colwise().mean().transpose();
  CovarianceEstimate cov = estimate_covariance_dense(curves, mean);
  Matrix truth = oracles::analytic_G(grid.points);
  double rel = (cov.surface - truth).norm() / truth.norm();
  CHECK(rel < 0.1);
  CHECK((cov.surface - cov.surface.transpose()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("sparse covariance of identical noiseless curves is zero") {
  Grid grid = make_grid(51);
  Rng rng(3);
  std::vector<SubjectRecord> subjects(40);
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    subjects[i].id = static_cast<std::int64_t>(i + 1);
    auto idx = rng.sample_without_replacement(51, 12);
    std::sort(idx.begin(), idx.end());
    subjects[i].t.resize(12);
    subjects[i].w.resize(12);
    for (Index j = 0; j < 12; ++j) {
      subjects[i].t[j] = grid.points[idx[j]];
      subjects[i].w[j] = std::sin(2.0 * M_PI * subjects[i].t[j]);  // one shared curve
    }
  }
  FunctionalDataset data =
      make_dataset(std::move(subjects), Vector::Zero(static_cast<Index>(40)));
  Vector mean = estimate_mean(data, grid, 0.05, Design::Sparse);
  CovarianceEstimate cov = estimate_covariance_sparse(data, grid, mean, 0.1, 0.1);
  CHECK(cov.surface.cwiseAbs().maxCoeff() < 0.05);
  CHECK(cov.noise_var == doctest::Approx(0.0).scale(1).epsilon(5e-3));
}

TEST_CASE("sparse path recovers the white-noise variance") {
  // X == 0, sigma = 1, n = 1000, m_i = 10
  Grid grid = make_grid(101);
  Rng rng(17);
  Index n = 1000;
  std::vector<SubjectRecord> subjects(n);
  for (Index i = 0; i < n; ++i) {
    subjects[i].id = i + 1;
    auto idx = rng.sample_without_replacement(101, 10);
    std::sort(idx.begin(), idx.end());
    subjects[i].t.resize(10);
    subjects[i].w.resize(10);
    for (Index j = 0; j < 10; ++j) {
      subjects[i].t[j] = grid.points[idx[j]];
      subjects[i].w[j] = rng.normal();
    }
  }
  FunctionalDataset data = make_dataset(std::move(subjects), Vector::Zero(n));
  Vector mean = Vector::Zero(grid.size());
  CovarianceEstimate cov = estimate_covariance_sparse(data, grid, mean);
  CHECK(cov.noise_var == doctest::Approx(1.0).scale(1).epsilon(0.15));
  CHECK(cov.noise_var >= 0.0);
}

TEST_CASE("sparse covariance recovers the generator covariance") {
  SimConfig config;
  config.n = 2000;
  config.design = SimDesign::Sparse90;  // m_i = 10
  config.sigma = 1.0;
  config.seed = 77;
  GeneratedData gd = generate_dataset(config, 0);
  Grid grid = make_grid(101);
  Vector mean = estimate_mean(gd.data, grid, 0.0, Design::Sparse);
  CovarianceEstimate cov = estimate_covariance_sparse(gd.data, grid, mean);
  Matrix truth = oracles::analytic_G(grid.points);
  double rel = (cov.surface - truth).norm() / truth.norm();
  CHECK(rel < 0.25);
  CHECK((cov.surface - cov.surface.transpose()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("sparse covariance requires a subject with two observations") {
  Grid grid = make_grid(11);
  std::vector<SubjectRecord> subjects(3);
  for (Index i = 0; i < 3; ++i) {
    subjects[i].id = i + 1;
    subjects[i].t = Vector::Constant(1, 0.1 * static_cast<double>(i + 1));
    subjects[i].w = Vector::Constant(1, 1.0);
  }
  FunctionalDataset data = make_dataset(std::move(subjects), Vector::Zero(3));
  Vector mean = Vector::Zero(grid.size());
  try {
    estimate_covariance_sparse(data, grid, mean, 0.2, 0.2);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientPairs);
  }
}
