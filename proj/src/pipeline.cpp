#include "fqr/pipeline.hpp"

#include <cmath>

namespace fqr {

PipelineModel fit_pipeline_model(const FunctionalDataset& data, const AnalysisOptions& options) {
  PipelineModel model;
  model.grid = make_grid(options.grid_size);
  model.design = options.design_override.value_or(classify_design(data, model.grid));

  if (model.design == Design::Dense) {
    SmoothedCurves curves = smooth_trajectories(data, model.grid, options.trajectory_bandwidth);
    model.trajectory_bandwidth = curves.bandwidth;
    Vector mean = curves.curves.colwise().mean().transpose();
    model.covariance = estimate_covariance_dense(curves, mean);
    model.eigen = fit_eigensystem(model.covariance, options.pve);
    double dense_rate = std::pow(static_cast<double>(data.n()), 1.25);
    if (static_cast<double>(data.min_obs()) < dense_rate) {
      model.warnings.push_back("dense path with m below n^(5/4); asymptotics may be optimistic");
    }
  } else {
    double mean_bw = options.mean_bandwidth > 0.0 ? options.mean_bandwidth
                                                  : cv_pooled_mean_bandwidth(data, model.grid);
    Vector mean = pooled_mean(data, model.grid, mean_bw);
    model.covariance = estimate_covariance_sparse(data, model.grid, mean,
                                                   options.cov_bandwidth,
                                                   options.diag_bandwidth);
    model.eigen = fit_eigensystem(model.covariance, options.pve);
  }
  return model;
}

ScoreMatrix compute_scores(const FunctionalDataset& data, const PipelineModel& model) {
  if (model.design == Design::Dense) {
    SmoothedCurves curves = smooth_trajectories(data, model.grid, model.trajectory_bandwidth);
    return scores_quadrature(curves, model.eigen);
  }
  return scores_conditional(data, model.eigen);
}

AnalysisResult analyze(const FunctionalDataset& data, const AnalysisOptions& options) {
  if (options.levels.size() < 2)
    raise(ErrorCode::InvalidConfig, "the adjusted Wald test needs at least two levels");
  AnalysisResult result;
  result.model = fit_pipeline_model(data, options);
  result.scores = compute_scores(data, result.model);
  result.fits = fit_multi(result.scores, data.responses, options.levels);
  result.blocks = estimate_covariance_blocks(result.scores, data.responses, options.levels);
  result.wald = adjusted_wald(result.fits, result.blocks.sigma_tilde, data.n());
  return result;
}

}  // namespace fqr
