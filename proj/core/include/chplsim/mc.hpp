#pragma once

#include "chplsim/el.hpp"
#include "chplsim/model.hpp"
#include "chplsim/simulate.hpp"

#include <Eigen/Dense>

#include <string>

namespace chplsim {

// Named simple hypotheses from the simulation study. The Lag(k) part
// fixes gamma1; the CH part fixes beta of the ArchLag1 variance.
enum class TestName {
  Lag0, Lag1, Lag2,            // PLSIM
  Lag0CH1, Lag1CH1, Lag2CH1,   // CHPLSIM, beta = (0.9, 0.1)
  Lag1CH0                      // CHPLSIM, beta = (0.9, 0)
};

TestName parse_test_name(const std::string& name);
std::string to_string(TestName test);
bool test_is_chplsim(TestName test);
ModelSpec test_model_spec(TestName test);
Theta test_theta0(TestName test);

enum class EtaModeKind { Estim, Ref };

struct ExperimentConfig {
  SimDesign design;
  TestName test = TestName::Lag1;
  int replications = 1000;
  double alpha = 0.05;
  EtaModeKind eta_mode = EtaModeKind::Estim;
  Eigen::Index train_size = 10000;  // Ref mode training sample size
  int workers = 1;
  bool skip_errors = false;

  void validate() const;
};

struct RejectionReport {
  std::string test;
  std::string innovation;
  Eigen::Index n = 0;
  std::string eta_mode;
  int replications = 0;
  double alpha = 0.05;
  int completed = 0;
  int rejections = 0;
  int hull_violations = 0;
  int skipped = 0;
  double wall_seconds = 0.0;

  double rate() const;
  double standard_error() const;  // sqrt(rate (1 - rate) / completed)

  // Header plus one row. Timing is excluded by default so that reports
  // are byte-identical across worker counts.
  std::string tsv(bool include_timing = false) const;
};

// Runs the full cell: per replication, simulate with sub-stream 2r
// (training sample for Ref mode on sub-stream 2r + 1), build the profile,
// test theta0, tally p < alpha. Deterministic for a fixed master seed
// regardless of worker count.
RejectionReport run_mc(const ExperimentConfig& config);

// Observed-with-error preprocessing: estimate the AR(1) coefficient by
// least squares, square the fitted innovations, and emit the regression-
// ready series (two lagged squared innovations as x, w aligned).
struct PrepAR {
  Series series;
  double rho_tilde = 0.0;
};
PrepAR prep_observed_ar(const Eigen::VectorXd& r_path,
                        const Eigen::MatrixXd& w);

// Flat JSON config document mirroring ExperimentConfig field names; every
// key is optional. Unknown keys are rejected.
ExperimentConfig experiment_config_from_json(const std::string& text);

// Config for testing / fitting a single CSV data set at a configured
// theta0 (the `test` and `fit` subcommands).
struct DataTestConfig {
  ModelSpec spec = ModelSpec::plsim(1, 2);
  Theta theta0;
  KernelConfig kernel = KernelConfig::scaled_rate();
  double alpha = 0.05;
};
DataTestConfig data_test_config_from_json(const std::string& text);

// Human-readable single-test report (TSV, one row).
std::string el_result_tsv(const ELResult& result);

}  // namespace chplsim
