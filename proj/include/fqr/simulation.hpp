#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fqr/pipeline.hpp"
#include "fqr/rng.hpp"

namespace fqr {

enum class SimDesign { Dense, Sparse50, Sparse90 };

const char* sim_design_name(SimDesign d);

/// Heteroscedastic generator: X_i a rank-3 Gaussian process over shifted
/// Legendre modes with eigenvalues (1, 1/2, 1/4);
/// Y_i = <X_i, t> + (1 + gamma <X_i, t^2>) eps_i.
struct SimConfig {
  Index n = 1000;
  Index m = 0;  // 0: resolved from the design (dense 100, sparse 50/10)
  SimDesign design = SimDesign::Dense;
  double sigma = 1.0;   // measurement noise sd
  double gamma = 0.0;   // heteroscedasticity; 0 puts the null in force
  std::vector<double> levels{0.1, 0.2, 0.3, 0.4};
  double pve = 0.95;
  Index replications = 1000;
  std::uint64_t seed = 1;
  std::vector<double> alpha_list{0.01, 0.05, 0.10};
  Index grid_size = 101;
  bool ssqr_median = false;  // SSQR summary: mean (default) or median
};

Index resolve_m(const SimConfig& config);

/// Orthonormal shifted Legendre modes on [0,1] (k = 1, 2, 3).
double legendre_mode(int k, double t);

/// beta(t, tau) = t + gamma t^2 Phi^{-1}(tau) implied by the generator.
double true_beta(double t, double tau, double gamma);

struct GeneratedData {
  FunctionalDataset data;
  Matrix true_scores;  // n x 3
};

GeneratedData generate_dataset(const SimConfig& config, Index replicate);

enum class TestMethod { AdjustedWald, NaiveQR, SSQR, PcaQR };

const char* method_name(TestMethod m);

/// Per-(method, alpha) rejection rates with binomial standard errors and the
/// fraction of replications where a method errored out.
struct StudyResult {
  std::vector<TestMethod> methods;
  std::vector<double> alphas;
  Matrix rejection_rates;  // methods x alphas
  Matrix mc_stderr;
  Vector failure_rate;
  Index replications = 0;
};

StudyResult run_type1_study(const SimConfig& config,
                            const std::vector<TestMethod>& methods = {TestMethod::AdjustedWald},
                            int workers = 1);

struct PowerPoint {
  Index n = 0;
  TestMethod method = TestMethod::AdjustedWald;
  double gamma = 0.0;
  double power = 0.0;
  double failure_rate = 0.0;
};

std::vector<PowerPoint> run_power_study(const SimConfig& config, const std::vector<Index>& n_values,
                                        const std::vector<TestMethod>& methods,
                                        int workers = 1, double alpha = 0.05);

/// Treats the raw dense observation vector as a plain covariate vector.
WaldResult naive_qr_test(const FunctionalDataset& data, const std::vector<double>& levels);

/// Single-number-summary baseline; the covariate is the per-subject mean.
WaldResult ssqr_test(const FunctionalDataset& data, const std::vector<double>& levels,
                     bool use_median = false);

/// Multivariate PCA on the raw observation vectors, then a vector-covariate
/// Wald test on the retained scores.
WaldResult pca_qr_test(const FunctionalDataset& data, const std::vector<double>& levels,
                       double pve = 0.95);

/// Null statistics with the true scores fed directly (no smoothing or FPCA);
/// isolates the test calibration from estimation error.
struct OracleNullDraws {
  std::vector<double> statistics;
  std::vector<double> p_values;
  int df = 0;
};

OracleNullDraws run_oracle_null(const SimConfig& config, int workers = 1);

enum class CurveMethod { RQ, QAE, CRQ };

const char* curve_method_name(CurveMethod m);

struct BootstrapResult {
  Grid grid;
  std::vector<CurveMethod> methods;
  std::vector<Vector> mean;  // per method, on grid
  std::vector<Vector> se;
  Index resamples_used = 0;
  Index failures = 0;
  std::vector<std::string> warnings;
};

/// Nonparametric pairs bootstrap of the slope-curve estimators. RQ reports
/// the fit at the highest level; QAE and CRQ report the shared slope curve.
BootstrapResult bootstrap_curves(const FunctionalDataset& data, const std::vector<double>& levels,
                                 Index resamples, std::uint64_t seed,
                                 const std::vector<CurveMethod>& methods,
                                 const AnalysisOptions& options);

/// Same, with caller-supplied resample index sets.
BootstrapResult bootstrap_curves_with_indices(const FunctionalDataset& data,
                                              const std::vector<double>& levels,
                                              const std::vector<std::vector<Index>>& index_sets,
                                              const std::vector<CurveMethod>& methods,
                                              const AnalysisOptions& options);

struct CvResult {
  std::vector<double> levels;
  std::vector<CurveMethod> methods;
  Matrix mean_pe;  // methods x levels
  Matrix se_pe;    // NaN when replications < 2
  Index replications_used = 0;
  Index failures = 0;
};

/// Repeated random 50/50 splits; out-of-sample pinball loss per level for
/// RQ / QAE / CRQ fitted on the training half.
CvResult cross_validate(const FunctionalDataset& data, const std::vector<double>& levels,
                        Index replications, std::uint64_t seed, const AnalysisOptions& options,
                        int workers = 1);

// CSV renderings of study outputs (written by the CLI).
std::string study_result_csv(const StudyResult& result, const SimConfig& config);
std::string power_curve_csv(const std::vector<PowerPoint>& points);
std::string bootstrap_csv(const BootstrapResult& result);
std::string cv_csv(const CvResult& result);

}  // namespace fqr
