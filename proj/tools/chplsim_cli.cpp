// Command line front end: Monte Carlo experiment cells, single-dataset
// testing and fitting on CSV input, simulation dumps, and the observed-AR
// preprocessing step.

#include "chplsim/csv.hpp"
#include "chplsim/el.hpp"
#include "chplsim/error.hpp"
#include "chplsim/fit.hpp"
#include "chplsim/mc.hpp"
#include "chplsim/simulate.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

using namespace chplsim;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw DataError("cannot open " + out_path + " for writing");
  out << text;
}

struct CommonOpts {
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config file");
  cmd->add_option("--out", opts.out_path, "output path (default stdout)");
  cmd->add_option("--seed", opts.seed, "master seed override");
  cmd->add_option("--workers", opts.workers, "worker thread count override");
}

int run_simulate(const CommonOpts& common, const std::string& preset,
                 long n, long burn_in, const std::string& innovation) {
  nlohmann::json doc = nlohmann::json::parse(
      common.config_path.empty() ? std::string("{}")
                                 : slurp(common.config_path));
  if (!preset.empty()) doc["preset"] = preset;
  if (n > 0) doc["n"] = n;
  if (burn_in >= 0) doc["burn_in"] = burn_in;
  if (!innovation.empty()) doc["innovation"] = innovation;
  if (common.seed) doc["seed"] = *common.seed;
  const ExperimentConfig config = experiment_config_from_json(doc.dump());

  const SimOutput sim = simulate(config.design);
  std::ostringstream buf;
  if (config.design.preset == Preset::DesignSupB2) {
    // Observable representation: the AR path in y, no linear covariates.
    Series observed;
    observed.y = sim.r_path;
    observed.x.resize(sim.r_path.size(), 0);
    observed.w = sim.series.w;
    write_series_csv(buf, observed);
  } else {
    write_series_csv(buf, sim.series);
  }
  emit(buf.str(), common.out_path);
  return 0;
}

int run_prep_ar(const CommonOpts& common, const std::string& in_path,
                int d_w) {
  const ModelSpec spec = ModelSpec::plsim(0, d_w);
  const Series observed = read_series_csv_file(in_path, spec);
  const PrepAR prep = prep_observed_ar(observed.y, observed.w);
  std::ostringstream buf;
  write_series_csv(buf, prep.series);
  emit(buf.str(), common.out_path);
  std::fprintf(stderr, "rho_tilde\t%.10g\n", prep.rho_tilde);
  return 0;
}

int run_test(const CommonOpts& common, const std::string& in_path,
             double alpha_override) {
  if (common.config_path.empty())
    throw ConfigError("test: --config is required (model and theta0)");
  DataTestConfig config = data_test_config_from_json(slurp(common.config_path));
  if (alpha_override > 0.0) config.alpha = alpha_override;
  const Series series = read_series_csv_file(in_path, config.spec);
  const ELResult result =
      wilks_test(series, config.theta0, config.spec, config.kernel);
  std::ostringstream buf;
  buf << el_result_tsv(result);
  char line[128];
  std::snprintf(line, sizeof(line), "reject_at_alpha_%.3g\t%s\n", config.alpha,
                result.p_value < config.alpha ? "yes" : "no");
  buf << line;
  emit(buf.str(), common.out_path);
  return 0;
}

int run_fit(const CommonOpts& common, const std::string& in_path) {
  if (common.config_path.empty())
    throw ConfigError("fit: --config is required (model description)");
  DataTestConfig config = data_test_config_from_json(slurp(common.config_path));
  const Series series = read_series_csv_file(in_path, config.spec);

  // Mean fit first; gamma dimensions come from the spec, init from data.
  ModelSpec mean_spec = config.spec;
  if (config.spec.family == Family::CHPLSIM)
    mean_spec = ModelSpec::plsim(config.spec.d_X, config.spec.d_W,
                                 config.spec.identification);
  const Theta init = default_init(series, mean_spec);
  const FitResult fit = profile_ls_fit(series, mean_spec, config.kernel, init);

  std::ostringstream buf;
  buf << "parameter\tvalue\n";
  char line[128];
  for (Eigen::Index k = 0; k < fit.theta_hat.gamma1.size(); ++k) {
    std::snprintf(line, sizeof(line), "gamma1_%ld\t%.6f\n", long(k + 1),
                  fit.theta_hat.gamma1(k));
    buf << line;
  }
  const Eigen::VectorXd gamma2 = materialize_gamma2(fit.theta_hat, mean_spec);
  for (Eigen::Index k = 0; k < gamma2.size(); ++k) {
    std::snprintf(line, sizeof(line), "gamma2_%ld\t%.6f\n", long(k + 1),
                  gamma2(k));
    buf << line;
  }
  if (config.spec.family == Family::CHPLSIM) {
    const Eigen::VectorXd beta =
        variance_ls_fit(fit.residuals, series, config.spec);
    for (Eigen::Index k = 0; k < beta.size(); ++k) {
      std::snprintf(line, sizeof(line), "beta_%ld\t%.6f\n", long(k + 1),
                    beta(k));
      buf << line;
    }
  }
  std::snprintf(line, sizeof(line), "sse\t%.6f\nevaluations\t%d\nconverged\t%s\n",
                fit.sse, fit.iterations, fit.converged ? "yes" : "no");
  buf << line;
  emit(buf.str(), common.out_path);
  return 0;
}

int run_mc_cell(const CommonOpts& common, const std::string& test,
                long n, long reps, double alpha, const std::string& innovation,
                const std::string& preset, const std::string& eta_mode,
                long train_size, bool skip_errors, bool timing) {
  std::string cfg_text = common.config_path.empty()
                             ? std::string("{}")
                             : slurp(common.config_path);
  // Flag overrides are applied by rewriting the JSON document.
  nlohmann::json doc = nlohmann::json::parse(cfg_text);
  if (!test.empty()) doc["test"] = test;
  if (n > 0) doc["n"] = n;
  if (reps > 0) doc["replications"] = reps;
  if (alpha > 0.0) doc["alpha"] = alpha;
  if (!innovation.empty()) doc["innovation"] = innovation;
  if (!preset.empty()) doc["preset"] = preset;
  if (!eta_mode.empty()) doc["eta_mode"] = eta_mode;
  if (train_size > 0) doc["train_size"] = train_size;
  if (skip_errors) doc["skip_errors"] = true;
  if (common.seed) doc["seed"] = *common.seed;
  if (common.workers) doc["workers"] = *common.workers;

  const ExperimentConfig config = experiment_config_from_json(doc.dump());
  const RejectionReport report = run_mc(config);
  emit(report.tsv(timing), common.out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Empirical likelihood testing for (CH)PLSIM time series"};
  app.require_subcommand(1);

  CommonOpts common;

  auto* sim_cmd = app.add_subcommand("simulate", "dump a simulated path as CSV");
  std::string sim_preset, sim_innovation;
  long sim_n = 0, sim_burn_in = -1;
  add_common(sim_cmd, common);
  sim_cmd->add_option("--preset", sim_preset, "design51 or sup-b2");
  sim_cmd->add_option("--n", sim_n, "sample size");
  sim_cmd->add_option("--burn-in", sim_burn_in, "burn-in length");
  sim_cmd->add_option("--innovation", sim_innovation,
                      "gaussian, uniform or mixture");

  auto* prep_cmd =
      app.add_subcommand("prep-ar", "square fitted AR(1) innovations");
  std::string prep_in;
  int prep_dw = 3;
  add_common(prep_cmd, common);
  prep_cmd->add_option("--in", prep_in, "input CSV (y = observed series)")
      ->required();
  prep_cmd->add_option("--d-w", prep_dw, "index covariate count");

  auto* test_cmd = app.add_subcommand("test", "EL test of theta0 on a CSV");
  std::string test_in;
  double test_alpha = 0.0;
  add_common(test_cmd, common);
  test_cmd->add_option("--in", test_in, "input CSV")->required();
  test_cmd->add_option("--alpha", test_alpha, "nominal level override");

  auto* fit_cmd = app.add_subcommand("fit", "profile least-squares fit");
  std::string fit_in;
  add_common(fit_cmd, common);
  fit_cmd->add_option("--in", fit_in, "input CSV")->required();

  auto* mc_cmd = app.add_subcommand("mc", "Monte Carlo rejection-rate cell");
  std::string mc_test, mc_innovation, mc_preset, mc_eta_mode;
  long mc_n = 0, mc_reps = 0, mc_train = 0;
  double mc_alpha = 0.0;
  bool mc_skip_errors = false, mc_timing = false;
  add_common(mc_cmd, common);
  mc_cmd->add_option("--test", mc_test, "hypothesis name, e.g. lag1");
  mc_cmd->add_option("--n", mc_n, "sample size");
  mc_cmd->add_option("--reps", mc_reps, "replication count");
  mc_cmd->add_option("--alpha", mc_alpha, "nominal level");
  mc_cmd->add_option("--innovation", mc_innovation, "noise law");
  mc_cmd->add_option("--preset", mc_preset, "design51 or sup-b2");
  mc_cmd->add_option("--eta-mode", mc_eta_mode, "estim or ref");
  mc_cmd->add_option("--train-size", mc_train, "ref-mode training size");
  mc_cmd->add_flag("--skip-errors", mc_skip_errors,
                   "skip failing replications instead of aborting");
  mc_cmd->add_flag("--timing", mc_timing, "include wall time in the report");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim_cmd->parsed())
      return run_simulate(common, sim_preset, sim_n, sim_burn_in,
                          sim_innovation);
    if (prep_cmd->parsed()) return run_prep_ar(common, prep_in, prep_dw);
    if (test_cmd->parsed()) return run_test(common, test_in, test_alpha);
    if (fit_cmd->parsed()) return run_fit(common, fit_in);
    if (mc_cmd->parsed())
      return run_mc_cell(common, mc_test, mc_n, mc_reps, mc_alpha,
                         mc_innovation, mc_preset, mc_eta_mode, mc_train,
                         mc_skip_errors, mc_timing);
  } catch (const ConfigError& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return 2;
  } catch (const std::domain_error& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return 2;
  } catch (const DataError& ex) {
    std::cerr << "data error: " << ex.what() << "\n";
    return 3;
  } catch (const NumericalError& ex) {
    std::cerr << "numerical error: " << ex.what() << "\n";
    return 4;
  } catch (const nlohmann::json::exception& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 4;
  }
  return 0;
}
