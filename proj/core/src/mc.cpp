#include "chplsim/mc.hpp"

#include "chplsim/error.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

namespace chplsim {

TestName parse_test_name(const std::string& name) {
  if (name == "lag0") return TestName::Lag0;
  if (name == "lag1") return TestName::Lag1;
  if (name == "lag2") return TestName::Lag2;
  if (name == "lag0-ch1") return TestName::Lag0CH1;
  if (name == "lag1-ch1") return TestName::Lag1CH1;
  if (name == "lag2-ch1") return TestName::Lag2CH1;
  if (name == "lag1-ch0") return TestName::Lag1CH0;
  throw ConfigError("unknown test name `" + name + "`");
}

std::string to_string(TestName test) {
  switch (test) {
    case TestName::Lag0: return "lag0";
    case TestName::Lag1: return "lag1";
    case TestName::Lag2: return "lag2";
    case TestName::Lag0CH1: return "lag0-ch1";
    case TestName::Lag1CH1: return "lag1-ch1";
    case TestName::Lag2CH1: return "lag2-ch1";
    case TestName::Lag1CH0: return "lag1-ch0";
  }
  return "?";
}

bool test_is_chplsim(TestName test) {
  switch (test) {
    case TestName::Lag0:
    case TestName::Lag1:
    case TestName::Lag2:
      return false;
    default:
      return true;
  }
}

ModelSpec test_model_spec(TestName test) {
  if (test_is_chplsim(test))
    return ModelSpec::chplsim(2, 3, VarianceForm::ArchLag1, /*r=*/1);
  return ModelSpec::plsim(2, 3);
}

Theta test_theta0(TestName test) {
  Theta theta;
  theta.gamma1.resize(2);
  switch (test) {
    case TestName::Lag0:
    case TestName::Lag0CH1:
      theta.gamma1 << 0.0, 0.0;
      break;
    case TestName::Lag1:
    case TestName::Lag1CH1:
    case TestName::Lag1CH0:
      theta.gamma1 << 0.1, 0.0;
      break;
    case TestName::Lag2:
    case TestName::Lag2CH1:
      theta.gamma1 << 0.1, 0.1;
      break;
  }
  theta.gamma2_free.resize(2);
  theta.gamma2_free << 1.0, 1.0;
  if (test_is_chplsim(test)) {
    theta.beta.resize(2);
    theta.beta << 0.9, (test == TestName::Lag1CH0 ? 0.0 : 0.1);
  }
  return theta;
}

void ExperimentConfig::validate() const {
  design.validate();
  if (replications < 1) throw ConfigError("mc: replications must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ConfigError("mc: alpha must be in (0, 1)");
  if (workers < 1) throw ConfigError("mc: workers must be >= 1");
  if (eta_mode == EtaModeKind::Ref && train_size < 100)
    throw ConfigError("mc: train_size too small for Ref mode");
  if (design.preset == Preset::DesignSupB2 && test_is_chplsim(test))
    throw ConfigError("mc: the observed-AR design supports PLSIM tests only");
}

double RejectionReport::rate() const {
  return completed > 0 ? double(rejections) / double(completed) : 0.0;
}

double RejectionReport::standard_error() const {
  if (completed <= 0) return 0.0;
  const double p = rate();
  return std::sqrt(p * (1.0 - p) / double(completed));
}

std::string RejectionReport::tsv(bool include_timing) const {
  std::ostringstream out;
  out << "test\tinnovation\tn\teta_mode\treplications\talpha\trejections"
      << "\trate\tse\thull_violations\tskipped";
  if (include_timing) out << "\twall_seconds";
  out << "\n";
  out << test << "\t" << innovation << "\t" << n << "\t" << eta_mode << "\t"
      << replications << "\t" << alpha << "\t" << rejections << "\t";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f\t%.6f", rate(), standard_error());
  out << buf << "\t" << hull_violations << "\t" << skipped;
  if (include_timing) {
    std::snprintf(buf, sizeof(buf), "\t%.3f", wall_seconds);
    out << buf;
  }
  out << "\n";
  return out.str();
}

namespace {

std::string innovation_name(Innovation law) {
  switch (law) {
    case Innovation::Gaussian: return "gaussian";
    case Innovation::Uniform: return "uniform";
    case Innovation::Mixture: return "mixture";
  }
  return "?";
}

Innovation parse_innovation(const std::string& name) {
  if (name == "gaussian") return Innovation::Gaussian;
  if (name == "uniform") return Innovation::Uniform;
  if (name == "mixture") return Innovation::Mixture;
  throw ConfigError("unknown innovation `" + name + "`");
}

Preset parse_preset(const std::string& name) {
  if (name == "design51") return Preset::Design51;
  if (name == "sup-b2") return Preset::DesignSupB2;
  throw ConfigError("unknown preset `" + name + "`");
}

// Outcome codes per replication, aggregated after the join so tallies do
// not depend on scheduling order.
enum class RepOutcome : std::uint8_t { Accept, Reject, RejectHull, Skipped };

struct RepError {
  std::mutex mutex;
  std::string message;
  std::atomic<bool> failed{false};

  void record(const std::string& msg) {
    std::lock_guard<std::mutex> lock(mutex);
    if (!failed.exchange(true)) message = msg;
  }
};

Series testable_series(const SimDesign& design, const SimOutput& sim) {
  if (design.preset == Preset::DesignSupB2)
    return prep_observed_ar(sim.r_path, sim.series.w).series;
  return sim.series;
}

RepOutcome run_replication(const ExperimentConfig& config, int rep,
                           const ModelSpec& spec, const Theta& theta0) {
  SimDesign design = config.design;
  design.seed = substream_seed(config.design.seed, 2 * std::uint64_t(rep));
  const SimOutput sim = simulate(design);
  const Series series = testable_series(design, sim);

  const KernelConfig cfg = KernelConfig::scaled_rate();
  ELResult result;
  if (config.eta_mode == EtaModeKind::Estim) {
    result = wilks_test(series, theta0, spec, cfg);
  } else {
    SimDesign train_design = config.design;
    train_design.n = config.train_size;
    train_design.seed =
        substream_seed(config.design.seed, 2 * std::uint64_t(rep) + 1);
    const SimOutput train_sim = simulate(train_design);
    const Series train = testable_series(train_design, train_sim);
    const Eigen::VectorXd gamma2 =
        materialize_gamma2(theta0, spec);
    OracleInputs oracle;
    oracle.train = &train;
    oracle.density = design_index_density(gamma2, config.design.rho_w);
    result = wilks_test(series, theta0, spec, cfg, EtaMode::Oracle, oracle);
  }

  if (result.p_value < config.alpha)
    return result.status == ELStatus::HullViolation ? RepOutcome::RejectHull
                                                    : RepOutcome::Reject;
  return RepOutcome::Accept;
}

}  // namespace

RejectionReport run_mc(const ExperimentConfig& config) {
  config.validate();
  const ModelSpec spec = test_model_spec(config.test);
  const Theta theta0 = test_theta0(config.test);

  const auto start = std::chrono::steady_clock::now();
  std::vector<RepOutcome> outcomes(std::size_t(config.replications),
                                   RepOutcome::Accept);
  RepError error;
  std::atomic<int> next{0};

  auto worker = [&]() {
    while (true) {
      const int rep = next.fetch_add(1);
      if (rep >= config.replications || error.failed.load()) return;
      try {
        outcomes[std::size_t(rep)] =
            run_replication(config, rep, spec, theta0);
      } catch (const std::exception& ex) {
        if (config.skip_errors) {
          outcomes[std::size_t(rep)] = RepOutcome::Skipped;
        } else {
          error.record("replication " + std::to_string(rep) + ": " +
                       ex.what());
          return;
        }
      }
    }
  };

  const int thread_count = std::min(config.workers, config.replications);
  if (thread_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(thread_count));
    for (int k = 0; k < thread_count; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error.failed.load())
    throw NumericalError("run_mc aborted: " + error.message);

  RejectionReport report;
  report.test = to_string(config.test);
  report.innovation = innovation_name(config.design.innovation);
  report.n = config.design.n;
  report.eta_mode = config.eta_mode == EtaModeKind::Estim ? "estim" : "ref";
  report.replications = config.replications;
  report.alpha = config.alpha;
  for (const RepOutcome outcome : outcomes) {
    switch (outcome) {
      case RepOutcome::Accept:
        ++report.completed;
        break;
      case RepOutcome::Reject:
        ++report.completed;
        ++report.rejections;
        break;
      case RepOutcome::RejectHull:
        ++report.completed;
        ++report.rejections;
        ++report.hull_violations;
        break;
      case RepOutcome::Skipped:
        ++report.skipped;
        break;
    }
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

PrepAR prep_observed_ar(const Eigen::VectorXd& r_path,
                        const Eigen::MatrixXd& w) {
  const Eigen::Index n = r_path.size();
  if (n < 4) throw DataError("prep-ar: need at least 4 observations");
  if (w.rows() != n) throw DataError("prep-ar: w not aligned with r");

  double sxx = 0.0, sxy = 0.0;
  for (Eigen::Index i = 1; i < n; ++i) {
    sxx += r_path(i - 1) * r_path(i - 1);
    sxy += r_path(i - 1) * r_path(i);
  }
  if (sxx <= 0.0) throw DataError("prep-ar: zero-variance series");
  const double rho = sxy / sxx;

  Eigen::VectorXd y_sq(n);  // squared fitted innovations, defined for i >= 1
  y_sq(0) = 0.0;
  for (Eigen::Index i = 1; i < n; ++i) {
    const double u = r_path(i) - rho * r_path(i - 1);
    y_sq(i) = u * u;
  }

  PrepAR out;
  out.rho_tilde = rho;
  const Eigen::Index rows = n - 3;
  out.series.y.resize(rows);
  out.series.x.resize(rows, 2);
  out.series.w.resize(rows, w.cols());
  for (Eigen::Index i = 3; i < n; ++i) {
    out.series.y(i - 3) = y_sq(i);
    out.series.x(i - 3, 0) = y_sq(i - 1);
    out.series.x(i - 3, 1) = y_sq(i - 2);
    out.series.w.row(i - 3) = w.row(i);
  }
  return out;
}

namespace {

using nlohmann::json;

json parse_object(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw ConfigError(std::string("config: invalid JSON: ") + ex.what());
  }
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  return doc;
}

template <typename T>
void read_key(const json& doc, const char* key, T& value) {
  if (!doc.contains(key)) return;
  try {
    value = doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: bad value for `") + key + "`");
  }
}

Eigen::VectorXd read_vector(const json& doc, const char* key,
                            const Eigen::VectorXd& fallback) {
  if (!doc.contains(key)) return fallback;
  const json& arr = doc.at(key);
  if (!arr.is_array())
    throw ConfigError(std::string("config: `") + key + "` must be an array");
  Eigen::VectorXd out(arr.size());
  for (std::size_t k = 0; k < arr.size(); ++k) {
    if (!arr[k].is_number())
      throw ConfigError(std::string("config: `") + key + "` must be numeric");
    out(Eigen::Index(k)) = arr[k].get<double>();
  }
  return out;
}

void reject_unknown_keys(const json& doc,
                         std::initializer_list<const char*> known) {
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    bool found = false;
    for (const char* key : known)
      if (it.key() == key) {
        found = true;
        break;
      }
    if (!found) throw ConfigError("config: unknown key `" + it.key() + "`");
  }
}

}  // namespace

ExperimentConfig experiment_config_from_json(const std::string& text) {
  const json doc = parse_object(text);
  reject_unknown_keys(doc, {"preset", "n", "burn_in", "innovation", "seed",
                            "rho_w", "rho0", "test", "replications", "alpha",
                            "eta_mode", "train_size", "workers",
                            "skip_errors"});

  std::string preset = "design51", innovation = "gaussian", test = "lag1",
              eta_mode = "estim";
  read_key(doc, "preset", preset);
  read_key(doc, "innovation", innovation);
  read_key(doc, "test", test);
  read_key(doc, "eta_mode", eta_mode);

  ExperimentConfig config;
  std::int64_t n = 1000, burn_in = 500, train_size = 10000;
  std::uint64_t seed = 0;
  read_key(doc, "n", n);
  read_key(doc, "burn_in", burn_in);
  read_key(doc, "train_size", train_size);
  read_key(doc, "seed", seed);

  config.design = parse_preset(preset) == Preset::Design51
                      ? SimDesign::design51(n, seed)
                      : SimDesign::sup_b2(n, seed);
  config.design.burn_in = burn_in;
  config.design.innovation = parse_innovation(innovation);
  read_key(doc, "rho_w", config.design.rho_w);
  read_key(doc, "rho0", config.design.rho0);

  config.test = parse_test_name(test);
  read_key(doc, "replications", config.replications);
  read_key(doc, "alpha", config.alpha);
  if (eta_mode == "estim")
    config.eta_mode = EtaModeKind::Estim;
  else if (eta_mode == "ref")
    config.eta_mode = EtaModeKind::Ref;
  else
    throw ConfigError("config: eta_mode must be `estim` or `ref`");
  config.train_size = train_size;
  read_key(doc, "workers", config.workers);
  read_key(doc, "skip_errors", config.skip_errors);
  config.validate();
  return config;
}

DataTestConfig data_test_config_from_json(const std::string& text) {
  const json doc = parse_object(text);
  reject_unknown_keys(doc, {"family", "d_x", "d_w", "identification",
                            "variance_form", "lag_r", "gamma1", "gamma2_free",
                            "beta", "bandwidth", "alpha"});

  std::string family = "plsim", identification = "fix_first",
              variance_form = "arch_lag1";
  int d_x = 1, d_w = 2, lag_r = 1;
  read_key(doc, "family", family);
  read_key(doc, "identification", identification);
  read_key(doc, "variance_form", variance_form);
  read_key(doc, "d_x", d_x);
  read_key(doc, "d_w", d_w);
  read_key(doc, "lag_r", lag_r);

  Identification id;
  if (identification == "fix_first")
    id = Identification::FixFirst;
  else if (identification == "unit_norm")
    id = Identification::UnitNorm;
  else
    throw ConfigError("config: identification must be fix_first or unit_norm");

  DataTestConfig config;
  if (family == "plsim") {
    config.spec = ModelSpec::plsim(d_x, d_w, id);
  } else if (family == "chplsim") {
    VarianceForm vf;
    if (variance_form == "arch_lag1")
      vf = VarianceForm::ArchLag1;
    else if (variance_form == "log_square")
      vf = VarianceForm::LogSquare;
    else
      throw ConfigError("config: variance_form must be arch_lag1 or log_square");
    config.spec = ModelSpec::chplsim(d_x, d_w, vf, lag_r, id);
  } else {
    throw ConfigError("config: family must be plsim or chplsim");
  }

  config.theta0.gamma1 = read_vector(doc, "gamma1",
                                     Eigen::VectorXd::Zero(config.spec.d1()));
  config.theta0.gamma2_free = read_vector(
      doc, "gamma2_free", Eigen::VectorXd::Zero(config.spec.d_W - 1));
  config.theta0.beta =
      read_vector(doc, "beta", Eigen::VectorXd::Zero(config.spec.d_beta));
  config.theta0.validate(config.spec);

  if (doc.contains("bandwidth")) {
    const json& bw = doc.at("bandwidth");
    if (bw.is_number()) {
      config.kernel = KernelConfig::manual(bw.get<double>());
      if (!(config.kernel.h > 0.0))
        throw ConfigError("config: bandwidth must be positive");
    } else if (bw.is_string() && bw.get<std::string>() == "scaled") {
      config.kernel = KernelConfig::scaled_rate();
    } else {
      throw ConfigError("config: bandwidth must be a number or \"scaled\"");
    }
  }
  read_key(doc, "alpha", config.alpha);
  if (!(config.alpha > 0.0 && config.alpha < 1.0))
    throw ConfigError("config: alpha must be in (0, 1)");
  return config;
}

std::string el_result_tsv(const ELResult& result) {
  std::ostringstream out;
  out << "wilks\tdf\tp_value\tstatus\titerations\tlambda\n";
  const char* status = result.status == ELStatus::Converged ? "converged"
                       : result.status == ELStatus::HullViolation
                           ? "hull_violation"
                           : "max_iter";
  char buf[64];
  if (std::isinf(result.wilks))
    out << "inf";
  else {
    std::snprintf(buf, sizeof(buf), "%.10g", result.wilks);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "%.10g", result.p_value);
  out << "\t" << result.df << "\t" << buf << "\t" << status << "\t"
      << result.iterations << "\t";
  for (Eigen::Index k = 0; k < result.lambda.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.10g", result.lambda(k));
    out << (k ? "," : "") << buf;
  }
  out << "\n";
  return out.str();
}

}  // namespace chplsim
