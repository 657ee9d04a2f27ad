#include "fqr/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fqr/io.hpp"
#include "fqr/parallel.hpp"
#include "fqr/stats.hpp"

namespace fqr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// exact inner products of the Legendre modes with t and t^2
const double kC1 = 0.28867513459481287;   // <phi_1, t>   = sqrt(3)/6
const double kC2a = 0.28867513459481287;  // <phi_1, t^2> = sqrt(3)/6
const double kC2b = 0.074535599249993001; // <phi_2, t^2> = sqrt(5)/30

void validate_levels(const std::vector<double>& levels) {
  if (levels.empty()) raise(ErrorCode::InvalidConfig, "no quantile levels");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i] > 0.0 && levels[i] < 1.0))
      raise(ErrorCode::InvalidConfig, "levels must lie in (0,1)");
    if (i > 0 && !(levels[i] > levels[i - 1]))
      raise(ErrorCode::InvalidConfig, "levels must be ascending");
  }
}

void validate_config(const SimConfig& config) {
  if (config.n < 2) raise(ErrorCode::InvalidConfig, "n must be at least 2");
  if (config.sigma < 0.0) raise(ErrorCode::InvalidConfig, "sigma must be nonnegative");
  if (config.gamma < 0.0) raise(ErrorCode::InvalidConfig, "gamma must be nonnegative");
  if (!(config.pve > 0.0 && config.pve <= 1.0))
    raise(ErrorCode::InvalidConfig, "pve must be in (0,1]");
  if (config.grid_size < 2) raise(ErrorCode::InvalidConfig, "grid_size must be at least 2");
  validate_levels(config.levels);
  for (double a : config.alpha_list) {
    if (!(a > 0.0 && a < 1.0)) raise(ErrorCode::InvalidConfig, "alpha must lie in (0,1)");
  }
  Index m = resolve_m(config);
  if (m < 1 || m > config.grid_size * 100)
    raise(ErrorCode::InvalidConfig, "points per subject out of range");
}

}  // namespace

const char* sim_design_name(SimDesign d) {
  switch (d) {
    case SimDesign::Dense: return "dense";
    case SimDesign::Sparse50: return "sparse50";
    case SimDesign::Sparse90: return "sparse90";
  }
  return "?";
}

const char* method_name(TestMethod m) {
  switch (m) {
    case TestMethod::AdjustedWald: return "adjusted_wald";
    case TestMethod::NaiveQR: return "naive_qr";
    case TestMethod::SSQR: return "ssqr";
    case TestMethod::PcaQR: return "pca_qr";
  }
  return "?";
}

const char* curve_method_name(CurveMethod m) {
  switch (m) {
    case CurveMethod::RQ: return "rq";
    case CurveMethod::QAE: return "qae";
    case CurveMethod::CRQ: return "crq";
  }
  return "?";
}

Index resolve_m(const SimConfig& config) {
  if (config.m > 0) return config.m;
  switch (config.design) {
    case SimDesign::Dense: return 100;
    case SimDesign::Sparse50: return 50;
    case SimDesign::Sparse90: return 10;
  }
  return 100;
}

double legendre_mode(int k, double t) {
  switch (k) {
    case 1: return 1.7320508075688772 * (2.0 * t - 1.0);
    case 2: return 2.2360679774997896 * (6.0 * t * t - 6.0 * t + 1.0);
    case 3: return 2.6457513110645906 * (((20.0 * t - 30.0) * t + 12.0) * t - 1.0);
    default: raise(ErrorCode::InvalidConfig, "legendre_mode supports k = 1..3");
  }
}

double true_beta(double t, double tau, double gamma) {
  return t + gamma * t * t * normal_quantile(tau);
}

GeneratedData generate_dataset(const SimConfig& config, Index replicate) {
  validate_config(config);
  Index n = config.n;
  Index m = resolve_m(config);
  bool dense = config.design == SimDesign::Dense;

  Rng rng_scores(config.seed, replicate, Rng::kScores);
  Rng rng_eps(config.seed, replicate, Rng::kResponseNoise);
  Rng rng_noise(config.seed, replicate, Rng::kMeasurementNoise);
  Rng rng_times(config.seed, replicate, Rng::kSamplingTimes);

  const double lambda_sd[3] = {1.0, 0.70710678118654752, 0.5};
  Matrix xi(n, 3);
  for (Index i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) xi(i, k) = lambda_sd[k] * rng_scores.normal();
  }

  Vector grid_points = Vector::LinSpaced(config.grid_size, 0.0, 1.0);
  Vector dense_times = Vector::LinSpaced(m, 0.0, 1.0);

  std::vector<SubjectRecord> subjects(n);
  Vector responses(n);
  for (Index i = 0; i < n; ++i) {
    double eps = rng_eps.normal();
    double xt = xi(i, 0) * kC1;
    double xt2 = xi(i, 0) * kC2a + xi(i, 1) * kC2b;
    responses[i] = xt + (1.0 + config.gamma * xt2) * eps;

    SubjectRecord& s = subjects[i];
    s.id = i + 1;
    if (dense) {
      s.t = dense_times;
    } else {
      auto idx = rng_times.sample_without_replacement(config.grid_size, m);
      std::sort(idx.begin(), idx.end());
      s.t.resize(m);
      for (Index j = 0; j < m; ++j) s.t[j] = grid_points[idx[j]];
    }
    s.w.resize(s.t.size());
    for (Index j = 0; j < s.t.size(); ++j) {
      double x = xi(i, 0) * legendre_mode(1, s.t[j]) + xi(i, 1) * legendre_mode(2, s.t[j]) +
                 xi(i, 2) * legendre_mode(3, s.t[j]);
      s.w[j] = x + config.sigma * rng_noise.normal();
    }
  }
  GeneratedData out;
  out.data = make_dataset(std::move(subjects), std::move(responses));
  out.true_scores = std::move(xi);
  return out;
}

// ---------------------------------------------------------------------------
// baseline tests
// ---------------------------------------------------------------------------

namespace {

WaldResult vector_qr_wald(const Matrix& design, const Vector& y,
                          const std::vector<double>& levels) {
  ScoreMatrix scores{design};
  MultiFit multi = fit_multi(scores, y, levels);
  CovarianceBlocks blocks = estimate_covariance_blocks(scores, y, levels);
  return adjusted_wald(multi, blocks.sigma_tilde, design.rows());
}

[[noreturn]] void rethrow_as_singular_design(const Error& e) {
  throw Error(ErrorCode::SingularDesign, e.what());
}

Matrix common_design_matrix(const FunctionalDataset& data) {
  if (!data.common_design())
    raise(ErrorCode::InvalidConfig, "baseline requires a common dense observation grid");
  Index n = data.n();
  Index m = data.subjects[0].num_obs();
  Matrix w(n, m);
  for (Index i = 0; i < n; ++i) w.row(i) = data.subjects[i].w.transpose();
  return w;
}

}  // namespace

WaldResult naive_qr_test(const FunctionalDataset& data, const std::vector<double>& levels) {
  validate_levels(levels);
  Matrix w = common_design_matrix(data);
  Matrix design(data.n(), w.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(w.cols()) = w;
  try {
    return vector_qr_wald(design, data.responses, levels);
  } catch (const Error& e) {
    rethrow_as_singular_design(e);
  }
}

WaldResult ssqr_test(const FunctionalDataset& data, const std::vector<double>& levels,
                     bool use_median) {
  validate_levels(levels);
  Index n = data.n();
  Matrix design(n, 2);
  design.col(0).setOnes();
  for (Index i = 0; i < n; ++i) {
    const Vector& w = data.subjects[i].w;
    if (use_median) {
      std::vector<double> v(w.data(), w.data() + w.size());
      std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
      double hi = v[v.size() / 2];
      if (v.size() % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + v.size() / 2 - 1, v.end());
        hi = 0.5 * (hi + v[v.size() / 2 - 1]);
      }
      design(i, 1) = hi;
    } else {
      design(i, 1) = w.mean();
    }
  }
  try {
    return vector_qr_wald(design, data.responses, levels);
  } catch (const Error& e) {
    rethrow_as_singular_design(e);
  }
}

WaldResult pca_qr_test(const FunctionalDataset& data, const std::vector<double>& levels,
                       double pve) {
  validate_levels(levels);
  Matrix w = common_design_matrix(data);
  Index n = w.rows();
  Vector mean = w.colwise().mean().transpose();
  Matrix centered = w.rowwise() - mean.transpose();
  Matrix cov = centered.transpose() * centered / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
  if (solver.info() != Eigen::Success)
    raise(ErrorCode::NumericalFailure, "raw PCA eigendecomposition failed");
  Index m = w.cols();
  Vector evals(m);
  for (Index k = 0; k < m; ++k) evals[k] = std::max(0.0, solver.eigenvalues()[m - 1 - k]);
  Index keep = select_truncation(evals, pve);
  Matrix basis(m, keep);
  for (Index k = 0; k < keep; ++k) basis.col(k) = solver.eigenvectors().col(m - 1 - k);
  Matrix design(n, keep + 1);
  design.col(0).setOnes();
  design.rightCols(keep) = centered * basis;
  try {
    return vector_qr_wald(design, data.responses, levels);
  } catch (const Error& e) {
    rethrow_as_singular_design(e);
  }
}

// ---------------------------------------------------------------------------
// Monte Carlo studies
// ---------------------------------------------------------------------------

namespace {

struct RepOutcome {
  std::vector<double> p_value;  // per method
  std::vector<char> ok;
};

double run_method_p(TestMethod method, const GeneratedData& gd, const SimConfig& config) {
  switch (method) {
    case TestMethod::AdjustedWald: {
      AnalysisOptions options;
      options.grid_size = config.grid_size;
      options.pve = config.pve;
      options.levels = config.levels;
      options.design_override =
          config.design == SimDesign::Dense ? Design::Dense : Design::Sparse;
      return analyze(gd.data, options).wald.p_value;
    }
    case TestMethod::NaiveQR: return naive_qr_test(gd.data, config.levels).p_value;
    case TestMethod::SSQR:
      return ssqr_test(gd.data, config.levels, config.ssqr_median).p_value;
    case TestMethod::PcaQR: return pca_qr_test(gd.data, config.levels, config.pve).p_value;
  }
  raise(ErrorCode::InvalidConfig, "unknown method");
}

StudyResult aggregate_study(const std::vector<RepOutcome>& outcomes,
                            const std::vector<TestMethod>& methods,
                            const std::vector<double>& alphas) {
  Index nm = static_cast<Index>(methods.size());
  Index na = static_cast<Index>(alphas.size());
  StudyResult result;
  result.methods = methods;
  result.alphas = alphas;
  result.replications = static_cast<Index>(outcomes.size());
  result.rejection_rates = Matrix::Constant(nm, na, kNaN);
  result.mc_stderr = Matrix::Constant(nm, na, kNaN);
  result.failure_rate = Vector::Zero(nm);
  if (outcomes.empty()) return result;
  for (Index m = 0; m < nm; ++m) {
    Index good = 0, failed = 0;
    std::vector<Index> rejections(na, 0);
    for (const auto& rep : outcomes) {
      if (!rep.ok[m]) {
        ++failed;
        continue;
      }
      ++good;
      for (Index a = 0; a < na; ++a) {
        if (rep.p_value[m] < alphas[a]) ++rejections[a];
      }
    }
    result.failure_rate[m] =
        static_cast<double>(failed) / static_cast<double>(outcomes.size());
    for (Index a = 0; a < na; ++a) {
      if (good > 0) {
        double r = static_cast<double>(rejections[a]) / static_cast<double>(good);
        result.rejection_rates(m, a) = r;
        result.mc_stderr(m, a) = std::sqrt(r * (1.0 - r) / static_cast<double>(good));
      }
    }
  }
  return result;
}

StudyResult run_study(const SimConfig& config, const std::vector<TestMethod>& methods,
                      int workers) {
  validate_config(config);
  if (methods.empty()) raise(ErrorCode::InvalidConfig, "no methods selected");
  std::vector<RepOutcome> outcomes(config.replications);
  parallel_for(config.replications, workers, [&](Index r) {
    GeneratedData gd = generate_dataset(config, r);
    RepOutcome& out = outcomes[r];
    out.p_value.assign(methods.size(), 1.0);
    out.ok.assign(methods.size(), 0);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      try {
        out.p_value[m] = run_method_p(methods[m], gd, config);
        out.ok[m] = 1;
      } catch (const Error&) {
        out.ok[m] = 0;  // recorded, not fatal
      }
    }
  });
  return aggregate_study(outcomes, methods, config.alpha_list);
}

}  // namespace

StudyResult run_type1_study(const SimConfig& config, const std::vector<TestMethod>& methods,
                            int workers) {
  if (config.gamma != 0.0)
    raise(ErrorCode::InvalidConfig, "type I study requires gamma = 0");
  return run_study(config, methods, workers);
}

std::vector<PowerPoint> run_power_study(const SimConfig& config,
                                        const std::vector<Index>& n_values,
                                        const std::vector<TestMethod>& methods, int workers,
                                        double alpha) {
  if (!(config.gamma > 0.0))
    raise(ErrorCode::InvalidConfig, "power study requires gamma > 0 (the alternative)");
  std::vector<Index> ns = n_values.empty() ? std::vector<Index>{config.n} : n_values;
  std::vector<PowerPoint> points;
  for (Index n : ns) {
    SimConfig local = config;
    local.n = n;
    local.alpha_list = {alpha};
    StudyResult result = run_study(local, methods, workers);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      PowerPoint pt;
      pt.n = n;
      pt.method = methods[m];
      pt.gamma = config.gamma;
      pt.power = result.rejection_rates(static_cast<Index>(m), 0);
      pt.failure_rate = result.failure_rate[static_cast<Index>(m)];
      points.push_back(pt);
    }
  }
  return points;
}

OracleNullDraws run_oracle_null(const SimConfig& config, int workers) {
  validate_config(config);
  if (config.gamma != 0.0) raise(ErrorCode::InvalidConfig, "oracle null requires gamma = 0");
  OracleNullDraws draws;
  draws.statistics.assign(config.replications, kNaN);
  draws.p_values.assign(config.replications, kNaN);
  std::vector<int> dfs(config.replications, 0);
  parallel_for(config.replications, workers, [&](Index r) {
    GeneratedData gd = generate_dataset(config, r);
    ScoreMatrix scores;
    scores.design.resize(config.n, 4);
    scores.design.col(0).setOnes();
    scores.design.rightCols(3) = gd.true_scores;
    MultiFit multi = fit_multi(scores, gd.data.responses, config.levels);
    CovarianceBlocks blocks =
        estimate_covariance_blocks(scores, gd.data.responses, config.levels);
    WaldResult wald = adjusted_wald(multi, blocks.sigma_tilde, config.n);
    draws.statistics[r] = wald.statistic;
    draws.p_values[r] = wald.p_value;
    dfs[r] = wald.df;
  });
  draws.df = dfs.empty() ? 0 : dfs[0];
  return draws;
}

// ---------------------------------------------------------------------------
// bootstrap and cross-validation
// ---------------------------------------------------------------------------

namespace {

FunctionalDataset subset_dataset(const FunctionalDataset& data, const std::vector<Index>& idx) {
  std::vector<SubjectRecord> subjects;
  subjects.reserve(idx.size());
  Vector responses(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    SubjectRecord s = data.subjects[idx[i]];
    s.id = static_cast<std::int64_t>(i + 1);  // resampled subjects get fresh ids
    subjects.push_back(std::move(s));
    responses[static_cast<Index>(i)] = data.responses[idx[i]];
  }
  return make_dataset(std::move(subjects), std::move(responses));
}

Vector curve_for_method(CurveMethod method, const PipelineModel& model, const ScoreMatrix& scores,
                        const Vector& y, const std::vector<double>& levels) {
  switch (method) {
    case CurveMethod::RQ: {
      QuantileFit fit = fit_quantile(scores, y, levels.back());
      return model.eigen.eigenfunctions * fit.slope();
    }
    case CurveMethod::QAE: {
      MultiFit multi = fit_multi(scores, y, levels);
      CompositeFit qae = fit_qae(multi);
      return model.eigen.eigenfunctions * qae.shared_slope;
    }
    case CurveMethod::CRQ: {
      CompositeFit crq = fit_crq(scores, y, levels);
      return model.eigen.eigenfunctions * crq.shared_slope;
    }
  }
  raise(ErrorCode::InvalidConfig, "unknown curve method");
}

}  // namespace

BootstrapResult bootstrap_curves_with_indices(const FunctionalDataset& data,
                                              const std::vector<double>& levels,
                                              const std::vector<std::vector<Index>>& index_sets,
                                              const std::vector<CurveMethod>& methods,
                                              const AnalysisOptions& options) {
  validate_levels(levels);
  if (index_sets.size() < 2) raise(ErrorCode::InvalidSize, "bootstrap needs at least 2 resamples");
  if (methods.empty()) raise(ErrorCode::InvalidConfig, "no methods selected");

  BootstrapResult result;
  result.methods = methods;
  result.grid = make_grid(options.grid_size);
  if (data.n() == 1) {
    result.warnings.push_back("n=1: every resample repeats the single subject; SE is zero");
  }

  std::vector<std::vector<Vector>> curves(methods.size());
  for (const auto& idx : index_sets) {
    try {
      FunctionalDataset resample = subset_dataset(data, idx);
      PipelineModel model = fit_pipeline_model(resample, options);
      ScoreMatrix scores = compute_scores(resample, model);
      for (std::size_t m = 0; m < methods.size(); ++m) {
        curves[m].push_back(
            curve_for_method(methods[m], model, scores, resample.responses, levels));
      }
    } catch (const Error&) {
      ++result.failures;
    }
  }
  Index used = static_cast<Index>(index_sets.size()) - result.failures;
  result.resamples_used = used;
  Index g = result.grid.size();
  for (std::size_t m = 0; m < methods.size(); ++m) {
    Vector mean = Vector::Zero(g);
    Vector se = Vector::Zero(g);
    if (used > 0) {
      for (const auto& c : curves[m]) mean += c;
      mean /= static_cast<double>(used);
      if (used > 1) {
        for (const auto& c : curves[m]) se += (c - mean).cwiseAbs2();
        se = (se / static_cast<double>(used - 1)).cwiseSqrt();
      }
    }
    result.mean.push_back(mean);
    result.se.push_back(se);
  }
  return result;
}

BootstrapResult bootstrap_curves(const FunctionalDataset& data, const std::vector<double>& levels,
                                 Index resamples, std::uint64_t seed,
                                 const std::vector<CurveMethod>& methods,
                                 const AnalysisOptions& options) {
  if (resamples < 2) raise(ErrorCode::InvalidSize, "bootstrap needs at least 2 resamples");
  std::vector<std::vector<Index>> index_sets(resamples);
  for (Index b = 0; b < resamples; ++b) {
    Rng rng(seed, b, Rng::kBootstrap);
    index_sets[b].resize(data.n());
    for (Index i = 0; i < data.n(); ++i) index_sets[b][i] = rng.uniform_index(data.n());
  }
  return bootstrap_curves_with_indices(data, levels, index_sets, methods, options);
}

CvResult cross_validate(const FunctionalDataset& data, const std::vector<double>& levels,
                        Index replications, std::uint64_t seed, const AnalysisOptions& options,
                        int workers) {
  validate_levels(levels);
  if (data.n() < 4) raise(ErrorCode::InvalidSize, "cross-validation needs n >= 4");
  if (replications < 1) raise(ErrorCode::InvalidConfig, "replications must be positive");

  const std::vector<CurveMethod> methods{CurveMethod::RQ, CurveMethod::QAE, CurveMethod::CRQ};
  Index nl = static_cast<Index>(levels.size());
  struct RepPe {
    Matrix pe;  // methods x levels
    bool ok = false;
  };
  std::vector<RepPe> reps(replications);
  parallel_for(replications, workers, [&](Index r) {
    Rng rng(seed, r, Rng::kCrossValidation);
    auto perm = rng.permutation(data.n());
    Index n_train = data.n() / 2;
    std::vector<Index> train_idx(perm.begin(), perm.begin() + n_train);
    std::vector<Index> test_idx(perm.begin() + n_train, perm.end());
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    try {
      FunctionalDataset train = subset_dataset(data, train_idx);
      FunctionalDataset test = subset_dataset(data, test_idx);
      PipelineModel model = fit_pipeline_model(train, options);
      ScoreMatrix scores_train = compute_scores(train, model);
      ScoreMatrix scores_test = compute_scores(test, model);
      MultiFit multi = fit_multi(scores_train, train.responses, levels);
      CompositeFit qae = fit_qae(multi);
      CompositeFit crq = fit_crq(scores_train, train.responses, levels);
      RepPe& rep = reps[r];
      rep.pe = Matrix::Zero(3, nl);
      for (Index l = 0; l < nl; ++l) {
        rep.pe(0, l) =
            prediction_error(multi.fits[l].theta, scores_test, test.responses, levels[l]);
        rep.pe(1, l) = prediction_error(qae.theta_at(l), scores_test, test.responses, levels[l]);
        rep.pe(2, l) = prediction_error(crq.theta_at(l), scores_test, test.responses, levels[l]);
      }
      rep.ok = true;
    } catch (const Error&) {
      reps[r].ok = false;
    }
  });

  CvResult result;
  result.levels = levels;
  result.methods = methods;
  result.mean_pe = Matrix::Constant(3, nl, kNaN);
  result.se_pe = Matrix::Constant(3, nl, kNaN);
  Index used = 0;
  Matrix sum = Matrix::Zero(3, nl);
  for (const auto& rep : reps) {
    if (!rep.ok) continue;
    ++used;
    sum += rep.pe;
  }
  result.replications_used = used;
  result.failures = replications - used;
  if (used > 0) {
    result.mean_pe = sum / static_cast<double>(used);
    if (used > 1) {
      Matrix ss = Matrix::Zero(3, nl);
      for (const auto& rep : reps) {
        if (!rep.ok) continue;
        ss += (rep.pe - result.mean_pe).cwiseAbs2();
      }
      result.se_pe = (ss / static_cast<double>(used * (used - 1))).cwiseSqrt();
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// CSV renderings
// ---------------------------------------------------------------------------

namespace {

std::string join_levels(const std::vector<double>& levels) {
  std::ostringstream os;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (i > 0) os << ';';
    os << levels[i];
  }
  return os.str();
}

}  // namespace

std::string study_result_csv(const StudyResult& result, const SimConfig& config) {
  std::ostringstream os;
  os << "method,design,n,m,sigma,gamma,levels,pve,alpha,rejection_rate,mc_stderr,"
        "failure_rate,replications\n";
  for (std::size_t m = 0; m < result.methods.size(); ++m) {
    for (std::size_t a = 0; a < result.alphas.size(); ++a) {
      os << method_name(result.methods[m]) << ',' << sim_design_name(config.design) << ','
         << config.n << ',' << resolve_m(config) << ',' << config.sigma << ',' << config.gamma
         << ',' << join_levels(config.levels) << ',' << config.pve << ',' << result.alphas[a]
         << ',' << result.rejection_rates(static_cast<Index>(m), static_cast<Index>(a)) << ','
         << result.mc_stderr(static_cast<Index>(m), static_cast<Index>(a)) << ','
         << result.failure_rate[static_cast<Index>(m)] << ',' << result.replications << '\n';
    }
  }
  return os.str();
}

std::string power_curve_csv(const std::vector<PowerPoint>& points) {
  std::ostringstream os;
  os << "n,method,gamma,power,failure_rate\n";
  for (const auto& pt : points) {
    os << pt.n << ',' << method_name(pt.method) << ',' << pt.gamma << ',' << pt.power << ','
       << pt.failure_rate << '\n';
  }
  return os.str();
}

std::string bootstrap_csv(const BootstrapResult& result) {
  std::ostringstream os;
  os << "t,method,mean,se\n";
  for (std::size_t m = 0; m < result.methods.size(); ++m) {
    for (Index g = 0; g < result.grid.size(); ++g) {
      os << format_double(result.grid.points[g]) << ',' << curve_method_name(result.methods[m])
         << ',' << format_double(result.mean[m][g]) << ',' << format_double(result.se[m][g])
         << '\n';
    }
  }
  return os.str();
}

std::string cv_csv(const CvResult& result) {
  std::ostringstream os;
  os << "tau,method,mean_pe,se_pe\n";
  for (std::size_t m = 0; m < result.methods.size(); ++m) {
    for (std::size_t l = 0; l < result.levels.size(); ++l) {
      double se = result.se_pe(static_cast<Index>(m), static_cast<Index>(l));
      os << result.levels[l] << ',' << curve_method_name(result.methods[m]) << ','
         << result.mean_pe(static_cast<Index>(m), static_cast<Index>(l)) << ',';
      if (std::isfinite(se)) {
        os << se;
      } else {
        os << "NA";
      }
      os << '\n';
    }
  }
  return os.str();
}

}  // namespace fqr
