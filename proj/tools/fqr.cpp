// fqr: functional quantile regression with an adjusted Wald test for
// slope-equality across quantile levels.
//
// Exit codes: 0 success, 2 data/config error, 3 numerical error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fqr/io.hpp"
#include "fqr/parallel.hpp"
#include "fqr/pipeline.hpp"
#include "fqr/simulation.hpp"

using json = nlohmann::json;
using namespace fqr;

namespace {

std::vector<double> parse_levels(const std::string& text) {
  if (text == "U1") return {0.1, 0.2, 0.3, 0.4};
  if (text == "U2") return {0.1, 0.2, 0.6, 0.7};
  std::vector<double> levels;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) levels.push_back(std::stod(item));
  }
  return levels;
}

json wald_to_json(const WaldResult& wald) {
  json j;
  j["statistic"] = wald.statistic;
  j["df"] = wald.df;
  j["p_value"] = wald.p_value;
  j["K"] = wald.K;
  j["levels"] = wald.levels;
  if (wald.used_pseudo_inverse) j["used_pseudo_inverse"] = true;
  return j;
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) return;
  write_file_atomic(path, content);
}

struct CommonDataArgs {
  std::string covariates;
  std::string responses;
  std::string levels_text = "0.1,0.2,0.3,0.4";
  double pve = 0.95;
  Index grid = 101;
  std::string design = "auto";
  double trajectory_bandwidth = 0.0;
  double mean_bandwidth = 0.0;
  double cov_bandwidth = 0.0;
  double diag_bandwidth = 0.0;

  void attach(CLI::App* cmd, bool with_levels = true) {
    cmd->add_option("--covariates", covariates, "covariate CSV (subject_id,t,w)")->required();
    cmd->add_option("--responses", responses, "response CSV (subject_id,y)")->required();
    if (with_levels) cmd->add_option("--levels", levels_text, "quantile levels, or U1/U2");
    cmd->add_option("--pve", pve, "variance fraction for truncation");
    cmd->add_option("--grid", grid, "evaluation grid size");
    cmd->add_option("--design", design, "auto|dense|sparse");
    cmd->add_option("--trajectory-bandwidth", trajectory_bandwidth,
                    "dense smoother bandwidth (0 = GCV)");
    cmd->add_option("--mean-bandwidth", mean_bandwidth, "sparse mean bandwidth (0 = CV)");
    cmd->add_option("--cov-bandwidth", cov_bandwidth, "sparse covariance bandwidth (0 = CV)");
    cmd->add_option("--diag-bandwidth", diag_bandwidth, "sparse diagonal bandwidth (0 = CV)");
  }

  AnalysisOptions options() const {
    AnalysisOptions opt;
    opt.grid_size = grid;
    opt.pve = pve;
    opt.levels = parse_levels(levels_text);
    if (design == "dense") opt.design_override = Design::Dense;
    else if (design == "sparse") opt.design_override = Design::Sparse;
    else if (design != "auto")
      raise(ErrorCode::InvalidConfig, "--design must be auto, dense or sparse");
    opt.trajectory_bandwidth = trajectory_bandwidth;
    opt.mean_bandwidth = mean_bandwidth;
    opt.cov_bandwidth = cov_bandwidth;
    opt.diag_bandwidth = diag_bandwidth;
    return opt;
  }

  FunctionalDataset load() const { return load_dataset(covariates, responses); }
};

std::string beta_curve_csv(const BetaCurve& curve) {
  std::ostringstream os;
  os << "t,beta_hat,se\n";
  for (Index g = 0; g < curve.grid.size(); ++g) {
    os << format_double(curve.grid.points[g]) << ',' << format_double(curve.beta[g]) << ','
       << format_double(curve.se[g]) << '\n';
  }
  return os.str();
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

// inspection dumps: mean curve, covariance surface, noise variance,
// eigenvalues, eigenfunctions and scores
void dump_model(const std::string& prefix, const AnalysisResult& result) {
  if (prefix.empty()) return;
  const Grid& grid = result.model.grid;
  const CovarianceEstimate& cov = result.model.covariance;
  {
    std::ostringstream os;
    os << "t,mean\n";
    for (Index g = 0; g < grid.size(); ++g) {
      os << format_double(grid.points[g]) << ',' << format_double(cov.mean[g]) << '\n';
    }
    write_file_atomic(prefix + "_mean.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "s,t,G\n";
    for (Index a = 0; a < grid.size(); ++a) {
      for (Index b = 0; b < grid.size(); ++b) {
        os << format_double(grid.points[a]) << ',' << format_double(grid.points[b]) << ','
           << format_double(cov.surface(a, b)) << '\n';
      }
    }
    write_file_atomic(prefix + "_covariance.csv", os.str());
  }
  write_file_atomic(prefix + "_noise.csv",
                    "sigma2\n" + format_double(cov.noise_var) + "\n");
  const EigenSystem& eigen = result.model.eigen;
  {
    std::ostringstream os;
    os << "k,lambda\n";
    for (Index k = 0; k < eigen.truncation(); ++k) {
      os << (k + 1) << ',' << format_double(eigen.eigenvalues[k]) << '\n';
    }
    write_file_atomic(prefix + "_eigenvalues.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "t,k,phi\n";
    for (Index k = 0; k < eigen.truncation(); ++k) {
      for (Index g = 0; g < grid.size(); ++g) {
        os << format_double(grid.points[g]) << ',' << (k + 1) << ','
           << format_double(eigen.eigenfunctions(g, k)) << '\n';
      }
    }
    write_file_atomic(prefix + "_eigenfunctions.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "subject,k,score\n";
    for (Index i = 0; i < result.scores.n(); ++i) {
      for (Index k = 1; k <= result.scores.truncation(); ++k) {
        os << (i + 1) << ',' << k << ',' << format_double(result.scores.design(i, k)) << '\n';
      }
    }
    write_file_atomic(prefix + "_scores.csv", os.str());
  }
}

int cmd_test(const CommonDataArgs& args, const std::string& out, const std::string& dump) {
  FunctionalDataset data = args.load();
  AnalysisResult result = analyze(data, args.options());
  print_warnings(result.model.warnings);
  dump_model(dump, result);
  json j = wald_to_json(result.wald);
  j["design"] = design_name(result.model.design);
  j["n"] = data.n();
  j["pve_achieved"] = result.model.eigen.pve_achieved;
  std::printf("p_value %.6g\n", result.wald.p_value);
  std::printf("statistic %.6g df %d K %d design %s\n", result.wald.statistic, result.wald.df,
              static_cast<int>(result.wald.K), design_name(result.model.design));
  write_output(out, j.dump(2) + "\n");
  return 0;
}

int cmd_fit(const CommonDataArgs& args, double tau, const std::string& out) {
  FunctionalDataset data = args.load();
  AnalysisOptions options = args.options();
  options.levels = {tau};
  PipelineModel model = fit_pipeline_model(data, options);
  print_warnings(model.warnings);
  ScoreMatrix scores = compute_scores(data, model);
  QuantileFit fit = fit_quantile(scores, data.responses, tau);
  CovarianceBlocks blocks = estimate_covariance_blocks(scores, data.responses, {tau});
  InflationCovariance infl =
      inflation_covariance(scores, model.eigen.eigenvalues, {fit.theta}, {tau});
  Index p = model.eigen.truncation() + 1;
  BetaCurve curve = beta_curve(fit, model.eigen, blocks.D0, blocks.D1[0],
                               infl.inflation.block(0, 0, p, p), data.n());
  std::printf("tau %.4g K %d design %s\n", tau, static_cast<int>(model.eigen.truncation()),
              design_name(model.design));
  write_output(out, beta_curve_csv(curve));
  return 0;
}

int cmd_composite(const CommonDataArgs& args, const std::string& method, const std::string& out) {
  FunctionalDataset data = args.load();
  AnalysisOptions options = args.options();
  if (options.levels.empty()) raise(ErrorCode::InvalidConfig, "composite needs levels");
  PipelineModel model = fit_pipeline_model(data, options);
  print_warnings(model.warnings);
  ScoreMatrix scores = compute_scores(data, model);

  json j;
  j["levels"] = options.levels;
  j["K"] = model.eigen.truncation();
  if (options.levels.size() == 1) {
    QuantileFit fit = fit_quantile(scores, data.responses, options.levels[0]);
    j["method"] = "rq";
    j["intercepts"] = std::vector<double>{fit.theta[0]};
    j["shared_slope"] = std::vector<double>(fit.theta.data() + 1,
                                            fit.theta.data() + fit.theta.size());
  } else if (method == "qae") {
    MultiFit multi = fit_multi(scores, data.responses, options.levels);
    CompositeFit fit = fit_qae(multi);
    j["method"] = "qae";
    j["intercepts"] = std::vector<double>(fit.intercepts.data(),
                                          fit.intercepts.data() + fit.intercepts.size());
    j["shared_slope"] = std::vector<double>(fit.shared_slope.data(),
                                            fit.shared_slope.data() + fit.shared_slope.size());
  } else if (method == "crq") {
    CompositeFit fit = fit_crq(scores, data.responses, options.levels);
    j["method"] = "crq";
    j["intercepts"] = std::vector<double>(fit.intercepts.data(),
                                          fit.intercepts.data() + fit.intercepts.size());
    j["shared_slope"] = std::vector<double>(fit.shared_slope.data(),
                                            fit.shared_slope.data() + fit.shared_slope.size());
  } else {
    raise(ErrorCode::InvalidConfig, "--method must be qae or crq");
  }
  std::printf("%s\n", j.dump(2).c_str());
  write_output(out, j.dump(2) + "\n");
  return 0;
}

int cmd_bootstrap(const CommonDataArgs& args, Index resamples, std::uint64_t seed,
                  const std::string& method, const std::string& out) {
  FunctionalDataset data = args.load();
  AnalysisOptions options = args.options();
  std::vector<CurveMethod> methods;
  if (method == "rq") methods = {CurveMethod::RQ};
  else if (method == "qae") methods = {CurveMethod::QAE};
  else if (method == "crq") methods = {CurveMethod::CRQ};
  else if (method == "all") methods = {CurveMethod::RQ, CurveMethod::QAE, CurveMethod::CRQ};
  else raise(ErrorCode::InvalidConfig, "--method must be rq, qae, crq or all");
  BootstrapResult result = bootstrap_curves(data, options.levels, resamples, seed, methods,
                                            options);
  print_warnings(result.warnings);
  std::printf("resamples_used %d failures %d\n", static_cast<int>(result.resamples_used),
              static_cast<int>(result.failures));
  write_output(out, bootstrap_csv(result));
  return 0;
}

int cmd_cv(const CommonDataArgs& args, Index replications, std::uint64_t seed, int workers,
           const std::string& out) {
  FunctionalDataset data = args.load();
  AnalysisOptions options = args.options();
  CvResult result = cross_validate(data, options.levels, replications, seed, options, workers);
  std::printf("replications_used %d failures %d\n",
              static_cast<int>(result.replications_used), static_cast<int>(result.failures));
  write_output(out, cv_csv(result));
  return 0;
}

struct SimArgs {
  SimConfig config;
  std::string levels_text = "U1";
  std::string design_text = "dense";
  std::string methods_text = "wald";
  std::string n_list_text;
  int workers = 0;
  std::string out;
  std::string config_file;

  void attach(CLI::App* cmd, bool power) {
    cmd->add_option("--config", config_file, "JSON config file; flags override");
    cmd->add_option("--n", config.n, "sample size");
    cmd->add_option("--m", config.m, "points per subject (0 = by design)");
    cmd->add_option("--design", design_text, "dense|sparse50|sparse90");
    cmd->add_option("--sigma", config.sigma, "measurement noise sd");
    cmd->add_option("--gamma", config.gamma, "heteroscedasticity");
    cmd->add_option("--levels", levels_text, "levels list or U1/U2");
    cmd->add_option("--pve", config.pve, "PVE for truncation");
    cmd->add_option("--reps", config.replications, "replications");
    cmd->add_option("--seed", config.seed, "RNG seed");
    cmd->add_option("--grid", config.grid_size, "grid size");
    cmd->add_option("--workers", workers, "worker threads (default FQR_WORKERS)");
    cmd->add_option("--methods", methods_text, "comma list: wald,ssqr,naive,pca");
    cmd->add_flag("--ssqr-median", config.ssqr_median, "summarize curves by the median");
    if (power) cmd->add_option("--n-list", n_list_text, "comma list of sample sizes");
    cmd->add_option("--out", out, "output CSV path");
  }

  void apply_config_file() {
    if (config_file.empty()) return;
    std::ifstream in(config_file);
    if (!in) raise(ErrorCode::InvalidConfig, "cannot open config file " + config_file);
    json j = json::parse(in, nullptr, true, true);
    if (j.contains("n")) config.n = j["n"].get<Index>();
    if (j.contains("m")) config.m = j["m"].get<Index>();
    if (j.contains("design")) design_text = j["design"].get<std::string>();
    if (j.contains("sigma")) config.sigma = j["sigma"].get<double>();
    if (j.contains("gamma")) config.gamma = j["gamma"].get<double>();
    if (j.contains("levels")) levels_text = j["levels"].get<std::string>();
    if (j.contains("pve")) config.pve = j["pve"].get<double>();
    if (j.contains("replications")) config.replications = j["replications"].get<Index>();
    if (j.contains("seed")) config.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("grid_size")) config.grid_size = j["grid_size"].get<Index>();
    if (j.contains("alpha_list")) config.alpha_list = j["alpha_list"].get<std::vector<double>>();
  }

  void finalize() {
    apply_config_file();
    config.levels = parse_levels(levels_text);
    if (design_text == "dense") config.design = SimDesign::Dense;
    else if (design_text == "sparse50") config.design = SimDesign::Sparse50;
    else if (design_text == "sparse90") config.design = SimDesign::Sparse90;
    else raise(ErrorCode::InvalidConfig, "--design must be dense, sparse50 or sparse90");
    if (workers <= 0) workers = default_workers();
  }

  std::vector<TestMethod> methods() const {
    std::vector<TestMethod> out_methods;
    std::stringstream ss(methods_text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item == "wald") out_methods.push_back(TestMethod::AdjustedWald);
      else if (item == "naive") out_methods.push_back(TestMethod::NaiveQR);
      else if (item == "ssqr") out_methods.push_back(TestMethod::SSQR);
      else if (item == "pca") out_methods.push_back(TestMethod::PcaQR);
      else if (!item.empty())
        raise(ErrorCode::InvalidConfig, "unknown method '" + item + "'");
    }
    return out_methods;
  }
};

int cmd_simulate_type1(SimArgs& args) {
  args.finalize();
  StudyResult result = run_type1_study(args.config, args.methods(), args.workers);
  std::string csv = study_result_csv(result, args.config);
  std::fputs(csv.c_str(), stdout);
  write_output(args.out, csv);
  return 0;
}

int cmd_simulate_power(SimArgs& args) {
  args.finalize();
  std::vector<Index> n_values;
  if (!args.n_list_text.empty()) {
    std::stringstream ss(args.n_list_text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) n_values.push_back(static_cast<Index>(std::stoll(item)));
    }
  }
  double alpha = args.config.alpha_list.empty() ? 0.05 : args.config.alpha_list[0];
  auto points = run_power_study(args.config, n_values, args.methods(), args.workers, alpha);
  std::string csv = power_curve_csv(points);
  std::fputs(csv.c_str(), stdout);
  write_output(args.out, csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"functional quantile regression: estimation, adjusted Wald testing, "
               "composite fits and Monte Carlo studies"};
  app.require_subcommand(1);

  CommonDataArgs test_args, fit_args, composite_args, bootstrap_args, cv_args;
  std::string test_out, fit_out, composite_out, bootstrap_out, cv_out;
  std::string test_dump;
  double fit_tau = 0.5;
  std::string composite_method = "crq";
  Index bootstrap_b = 1000;
  std::uint64_t bootstrap_seed = 1, cv_seed = 1;
  std::string bootstrap_method = "all";
  Index cv_reps = 1000;
  int cv_workers = 0;

  auto* test_cmd = app.add_subcommand("test", "adjusted Wald test of equal slope functions");
  test_args.attach(test_cmd);
  test_cmd->add_option("--out", test_out, "write WaldResult JSON here");
  test_cmd->add_option("--dump-prefix", test_dump,
                       "write mean/covariance/eigen/score CSVs with this prefix");

  auto* fit_cmd = app.add_subcommand("fit", "single-level fit with beta(t) curve and SEs");
  fit_args.attach(fit_cmd, false);
  fit_cmd->add_option("--tau", fit_tau, "quantile level");
  fit_cmd->add_option("--out", fit_out, "write curve CSV here");

  auto* composite_cmd = app.add_subcommand("composite", "QAE / CRQ composite fits");
  composite_args.attach(composite_cmd);
  composite_cmd->add_option("--method", composite_method, "qae|crq");
  composite_cmd->add_option("--out", composite_out, "write fit JSON here");

  auto* bootstrap_cmd = app.add_subcommand("bootstrap", "pairs bootstrap of slope curves");
  bootstrap_args.attach(bootstrap_cmd);
  bootstrap_cmd->add_option("-B,--resamples", bootstrap_b, "bootstrap resamples");
  bootstrap_cmd->add_option("--seed", bootstrap_seed, "RNG seed");
  bootstrap_cmd->add_option("--method", bootstrap_method, "rq|qae|crq|all");
  bootstrap_cmd->add_option("--out", bootstrap_out, "write curves CSV here");

  auto* cv_cmd = app.add_subcommand("cv", "cross-validated prediction error");
  cv_args.attach(cv_cmd);
  cv_cmd->add_option("--replications", cv_reps, "random 50/50 splits");
  cv_cmd->add_option("--seed", cv_seed, "RNG seed");
  cv_cmd->add_option("--workers", cv_workers, "worker threads");
  cv_cmd->add_option("--out", cv_out, "write PE table CSV here");

  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo studies");
  sim_cmd->require_subcommand(1);
  SimArgs type1_args, power_args;
  auto* type1_cmd = sim_cmd->add_subcommand("type1", "Type I error study (gamma = 0)");
  type1_args.attach(type1_cmd, false);
  auto* power_cmd = sim_cmd->add_subcommand("power", "power study (gamma > 0)");
  power_args.attach(power_cmd, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*test_cmd) return cmd_test(test_args, test_out, test_dump);
    if (*fit_cmd) return cmd_fit(fit_args, fit_tau, fit_out);
    if (*composite_cmd) return cmd_composite(composite_args, composite_method, composite_out);
    if (*bootstrap_cmd)
      return cmd_bootstrap(bootstrap_args, bootstrap_b, bootstrap_seed, bootstrap_method,
                           bootstrap_out);
    if (*cv_cmd) {
      if (cv_workers <= 0) cv_workers = default_workers();
      return cmd_cv(cv_args, cv_reps, cv_seed, cv_workers, cv_out);
    }
    if (*type1_cmd) return cmd_simulate_type1(type1_args);
    if (*power_cmd) return cmd_simulate_power(power_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.is_data_error() ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
