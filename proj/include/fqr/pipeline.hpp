#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fqr/inference.hpp"

namespace fqr {

struct AnalysisOptions {
  Index grid_size = 101;
  double pve = 0.95;
  std::vector<double> levels;
  std::optional<Design> design_override;
  double trajectory_bandwidth = 0.0;  // <= 0 selects by GCV
  double mean_bandwidth = 0.0;        // sparse path, <= 0 selects by CV
  double cov_bandwidth = 0.0;
  double diag_bandwidth = 0.0;
};

/// Everything needed to score new subjects: grid, design route, eigensystem
/// and the trajectory bandwidth the dense path settled on. The covariance
/// estimate is retained for inspection dumps.
struct PipelineModel {
  Grid grid;
  Design design = Design::Dense;
  EigenSystem eigen;
  CovarianceEstimate covariance;
  double trajectory_bandwidth = 0.0;
  std::vector<std::string> warnings;
};

struct AnalysisResult {
  PipelineModel model;
  ScoreMatrix scores;
  MultiFit fits;
  CovarianceBlocks blocks;
  WaldResult wald;
};

PipelineModel fit_pipeline_model(const FunctionalDataset& data, const AnalysisOptions& options);

/// Scores a dataset against an already fitted model (dense: smooth +
/// quadrature; sparse: conditional expectation).
ScoreMatrix compute_scores(const FunctionalDataset& data, const PipelineModel& model);

/// Full analysis: smoothing, FPCA, per-level quantile fits, plug-in
/// covariance and the adjusted Wald test.
AnalysisResult analyze(const FunctionalDataset& data, const AnalysisOptions& options);

}  // namespace fqr
