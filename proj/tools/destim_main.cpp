// Command-line front end: experiment configuration, execution and artifact
// emission. Subcommands: simulate, tradeoff, verify-info, directsum.
// Exit codes: 0 ok, 2 spec error, 3 runtime protocol error, 4 inequality
// violation.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <string>

#include "destim/harness.hpp"
#include "destim/infotheory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace destim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSpec = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitViolation = 4;

struct SpecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonFlags {
  std::string spec_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<long long> trials;
  int jobs = 1;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--spec", flags.spec_path, "JSON spec file")->required();
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_option("--seed", flags.seed, "master seed (overrides spec)");
  cmd->add_option("--trials", flags.trials, "trial count (overrides spec)");
  cmd->add_option("--jobs", flags.jobs, "worker threads");
}

json load_spec(const CommonFlags& flags) {
  std::ifstream in(flags.spec_path);
  if (!in) throw SpecError("cannot open spec file: " + flags.spec_path);
  json spec;
  try {
    in >> spec;
  } catch (const json::exception& e) {
    throw SpecError(std::string("spec is not valid JSON: ") + e.what());
  }
  if (flags.seed) spec["seed"] = *flags.seed;
  if (flags.trials) spec["trials"] = *flags.trials;
  return spec;
}

template <typename T>
T require(const json& spec, const std::string& field) {
  if (!spec.contains(field))
    throw SpecError("spec is missing required field: " + field);
  try {
    return spec.at(field).get<T>();
  } catch (const json::exception&) {
    throw SpecError("spec field has wrong type: " + field);
  }
}

ExperimentConfig config_from(const json& spec) {
  ExperimentConfig config;
  config.d = require<int>(spec, "d");
  config.m = require<int>(spec, "m");
  config.n = require<int>(spec, "n");
  config.sigma2 = require<double>(spec, "sigma2");
  try {
    config.validate();
  } catch (const std::exception& e) {
    throw SpecError(e.what());
  }
  return config;
}

PriorSpec prior_from(const json& p) {
  const auto type = require<std::string>(p, "type");
  try {
    if (type == "point_mass")
      return PriorSpec::point_mass(require<ParameterVector>(p, "theta"));
    if (type == "uniform_pm") return PriorSpec::uniform_pm(require<double>(p, "delta"));
    if (type == "gaussian") return PriorSpec::gaussian(require<double>(p, "delta2"));
    if (type == "uniform")
      return PriorSpec::uniform_interval(require<double>(p, "lo"),
                                         require<double>(p, "hi"));
  } catch (const SpecError&) {
    throw;
  } catch (const std::exception& e) {
    throw SpecError(e.what());
  }
  throw SpecError("unknown prior type: " + type);
}

ThetaSampler sampler_from(const json& spec, const ExperimentConfig& config) {
  const json& p = spec.at("prior");
  const auto type = require<std::string>(p, "type");
  if (type == "sparse_support") {
    return sparse_support_sampler(config.d, require<int>(p, "s"),
                                  p.value("magnitude", 1.0));
  }
  return sampler_from_prior(prior_from(p), config.d);
}

json stats_json(const StatsSummary& s) {
  return {{"mean", s.mean},
          {"stderr", s.stderr_},
          {"ci95", {s.ci95_lo, s.ci95_hi}},
          {"count", s.count}};
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

ProtocolSetup setup_from(const json& spec, const ExperimentConfig& config) {
  const auto name = require<std::string>(spec, "protocol");
  try {
    if (name == "averaging") return make_averaging(config, true);
    if (name == "averaging_unquantized") return make_averaging(config, false);
    if (name == "bisection") return make_bisection(config, false);
    if (name == "bisection_literal") return make_bisection(config, true);
    if (name == "sparse") {
      const json& sp = spec.at("sparse");
      SparseParams params;
      params.s = require<int>(sp, "s");
      params.alpha = require<double>(sp, "alpha");
      params.L_const = sp.value("L_const", 4.0);
      return make_sparse(config, params);
    }
  } catch (const SpecError&) {
    throw;
  } catch (const json::exception&) {
    throw SpecError("spec is missing required field: sparse");
  } catch (const std::exception& e) {
    throw SpecError(e.what());
  }
  throw SpecError("unknown protocol: " + name);
}

int cmd_simulate(const CommonFlags& flags) {
  const json spec = load_spec(flags);
  const ExperimentConfig config = config_from(spec);
  const auto seed = require<std::uint64_t>(spec, "seed");
  const auto trials = require<long long>(spec, "trials");
  if (trials < 1) throw SpecError("spec field must be positive: trials");
  const ProtocolSetup setup = setup_from(spec, config);

  json summary = {{"schema_version", kTrialSchemaVersion},
                  {"protocol", setup.name},
                  {"d", config.d},
                  {"m", config.m},
                  {"n", config.n},
                  {"sigma2", config.sigma2},
                  {"seed", seed},
                  {"trials", trials}};

  if (spec.contains("grid")) {
    std::vector<ParameterVector> grid;
    for (const auto& point : spec.at("grid")) {
      auto theta = point.get<ParameterVector>();
      if (static_cast<int>(theta.size()) != config.d)
        throw SpecError("grid point dimension mismatch");
      for (double x : theta)
        if (x < -1.0 || x > 1.0) throw SpecError("grid point outside [-1,1]^d");
      grid.push_back(std::move(theta));
    }
    const GridRiskResult result =
        minimax_risk_over_grid(setup, grid, trials, seed, flags.jobs);
    json points = json::array();
    for (const auto& [theta, mse] : result.per_point)
      points.push_back({{"theta", theta}, {"mse", stats_json(mse)}});
    summary["grid"] = points;
    summary["worst"] = {{"theta", result.worst_theta},
                        {"mse", stats_json(result.worst)}};
    write_file(fs::path(flags.out_dir) / "summary.json", summary.dump(2) + "\n");
    return kExitOk;
  }

  if (!spec.contains("prior")) throw SpecError("spec is missing required field: prior");
  const ThetaSampler prior = sampler_from(spec, config);
  const RiskResult result = estimate_risk(setup, prior, trials, seed, flags.jobs);

  std::ostringstream csv;
  write_trials_csv(csv, result.records);
  write_file(fs::path(flags.out_dir) / "trials.csv", csv.str());

  summary["mse"] = stats_json(result.mse);
  summary["bits"] = stats_json(result.bits);
  summary["failed_trials"] = result.failed_trials;
  write_file(fs::path(flags.out_dir) / "summary.json", summary.dump(2) + "\n");
  if (result.failed_trials > 0 &&
      result.failed_trials * 1000 >= static_cast<long long>(result.records.size()))
    return kExitRuntime;
  return kExitOk;
}

int cmd_tradeoff(const CommonFlags& flags) {
  const json spec = load_spec(flags);
  const ExperimentConfig config = config_from(spec);
  const auto seed = require<std::uint64_t>(spec, "seed");
  const auto trials = require<long long>(spec, "trials");
  const int s = require<int>(spec, "s");
  const auto alphas = require<std::vector<double>>(spec, "alphas");
  if (alphas.empty()) throw SpecError("spec field must be nonempty: alphas");
  for (double a : alphas)
    if (a < 1.0 || a > static_cast<double>(config.d) / s)
      throw SpecError("alpha outside [1, d/s]");

  const auto points = tradeoff_sweep_sparse(config, s, alphas, trials, seed, flags.jobs);
  std::ostringstream csv;
  csv << "alpha,mse_mean,mse_stderr,bits_mean,cost_risk_product\n";
  char buf[256];
  for (const auto& pt : points) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", pt.alpha,
                  pt.mse.mean, pt.mse.stderr_, pt.bits.mean, pt.cost_risk_product);
    csv << buf;
  }
  write_file(fs::path(flags.out_dir) / "tradeoff.csv", csv.str());
  return kExitOk;
}

int cmd_verify_info(const CommonFlags& flags) {
  const json spec = load_spec(flags);
  const auto seed = require<std::uint64_t>(spec, "seed");
  json report = {{"schema_version", kTrialSchemaVersion}, {"seed", seed}};
  bool all_hold = true;

  // Optional inline joint (axes X_1..X_k, Y, Theta) checked directly.
  if (spec.contains("joint")) {
    const json& jj = spec.at("joint");
    DiscreteJoint joint;
    joint.sizes = require<std::vector<std::size_t>>(jj, "sizes");
    joint.p = require<std::vector<double>>(jj, "table");
    const int k = require<int>(jj, "k");
    try {
      joint.validate();
      const SuperadditivityReport r = check_superadditivity(joint, k);
      report["joint"] = {{"lhs", r.lhs}, {"rhs", r.rhs}, {"holds", r.holds}};
      all_hold = all_hold && r.holds;
    } catch (const std::exception& e) {
      throw SpecError(e.what());
    }
  }

  // Superadditivity sweep on random conditionally independent joints.
  const int n_joints = spec.value("superadditivity_joints", 1000);
  Rng rng = Rng::derive(seed, 0x76657269667900ULL);
  int sweep_failures = 0;
  double worst_margin = 1e300;
  for (int it = 0; it < n_joints; ++it) {
    const int k = 2 + static_cast<int>(rng.next_below(2));
    const std::size_t nx = 2 + rng.next_below(2);
    const std::size_t ny = 2 + rng.next_below(2);
    const std::size_t nt = 2 + rng.next_below(2);
    const DiscreteJoint joint = random_ci_joint(k, nx, ny, nt, rng);
    const SuperadditivityReport r = check_superadditivity(joint, k);
    if (!r.holds) ++sweep_failures;
    worst_margin = std::min(worst_margin, r.rhs - r.lhs);
  }
  report["superadditivity"] = {{"instances", n_joints},
                               {"failures", sweep_failures},
                               {"worst_margin_bits", worst_margin}};
  all_hold = all_hold && sweep_failures == 0;

  // SDPI sweep: random threshold quantizers x (delta2, n) settings.
  const int n_quantizers = spec.value("sdpi_quantizers", 8);
  const std::vector<std::pair<double, int>> settings = {{1.0, 1}, {0.25, 1}, {1.0, 4}};
  json sdpi_rows = json::array();
  Rng qrng = Rng::derive(seed, 0x7364706900ULL);
  for (const auto& [delta2, n] : settings) {
    GaussianChainSpec chain;
    chain.delta2 = delta2;
    chain.sigma2 = 1.0;
    chain.n = n;
    const double x_sd =
        std::sqrt(static_cast<double>(n) * n * delta2 + n * chain.sigma2);
    for (int qi = 0; qi < n_quantizers; ++qi) {
      const int n_thresholds = 1 + static_cast<int>(qrng.next_below(3));
      std::vector<double> thresholds;
      for (int ti = 0; ti < n_thresholds; ++ti)
        thresholds.push_back((2.0 * qrng.next_unit() - 1.0) * 2.0 * x_sd);
      const SdpiReport r = sdpi_check(chain, thresholds);
      sdpi_rows.push_back({{"delta2", delta2},
                           {"n", n},
                           {"thresholds", thresholds},
                           {"I_YV", r.info_y_v},
                           {"I_YX", r.info_y_x},
                           {"I_YX_given_V", r.info_y_x_given_v},
                           {"rho2", r.rho2},
                           {"I_XV", r.info_x_v},
                           {"I_XV_closed_form", r.info_x_v_closed_form},
                           {"holds", r.holds}});
      all_hold = all_hold && r.holds;
    }
  }
  // Constant quantizer row: all information quantities must be zero.
  {
    GaussianChainSpec chain;
    const SdpiReport r = sdpi_check(chain, {});
    sdpi_rows.push_back({{"delta2", chain.delta2},
                         {"n", chain.n},
                         {"thresholds", json::array()},
                         {"I_YV", r.info_y_v},
                         {"I_YX", r.info_y_x},
                         {"I_YX_given_V", r.info_y_x_given_v},
                         {"rho2", r.rho2},
                         {"I_XV", r.info_x_v},
                         {"I_XV_closed_form", r.info_x_v_closed_form},
                         {"holds", r.holds}});
    all_hold = all_hold && r.holds;
  }
  report["sdpi"] = sdpi_rows;
  report["all_hold"] = all_hold;
  write_file(fs::path(flags.out_dir) / "info_report.json", report.dump(2) + "\n");
  if (!all_hold) {
    std::fprintf(stderr, "verify-info: at least one inequality violated\n");
    return kExitViolation;
  }
  return kExitOk;
}

int cmd_directsum(const CommonFlags& flags) {
  const json spec = load_spec(flags);
  const ExperimentConfig config = config_from(spec);
  const auto seed = require<std::uint64_t>(spec, "seed");
  const auto trials = require<long long>(spec, "trials");
  const auto inner_name = require<std::string>(spec, "inner");
  InnerKind kind;
  SparseParams sparse_params;
  if (inner_name == "averaging") {
    kind = InnerKind::Averaging;
  } else if (inner_name == "sparse") {
    kind = InnerKind::SparseThreshold;
    const json& sp = spec.contains("sparse") ? spec.at("sparse") : json::object();
    sparse_params.s = sp.value("s", std::max(1, config.d / 4));
    sparse_params.alpha = sp.value("alpha", 1.0);
    sparse_params.L_const = sp.value("L_const", 4.0);
  } else {
    throw SpecError("unknown inner protocol: " + inner_name);
  }
  if (!spec.contains("prior")) throw SpecError("spec is missing required field: prior");
  const PriorSpec prior = prior_from(spec.at("prior"));

  const DirectSumReport r = directsum_audit(kind, prior, config, sparse_params,
                                            trials, seed, flags.jobs);
  json report = {{"schema_version", kTrialSchemaVersion},
                 {"inner", inner_name},
                 {"d", config.d},
                 {"per_coordinate_mse", r.per_coordinate_mse},
                 {"sum_coordinate_mse", r.sum_coordinate_mse},
                 {"full_mse", r.full_mse},
                 {"ratio", r.ratio},
                 {"ratio_ci95", {r.ratio_ci95_lo, r.ratio_ci95_hi}},
                 {"best_coordinate", r.best_coordinate},
                 {"best_coordinate_within_4_over_d", r.best_coordinate_within_4_over_d}};
  write_file(fs::path(flags.out_dir) / "directsum_report.json", report.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributed Gaussian mean estimation simulator"};
  app.require_subcommand(1);

  CommonFlags simulate_flags, tradeoff_flags, info_flags, directsum_flags;
  auto* simulate = app.add_subcommand("simulate", "run a protocol risk experiment");
  add_common(simulate, simulate_flags);
  auto* tradeoff = app.add_subcommand("tradeoff", "sparse alpha sweep");
  add_common(tradeoff, tradeoff_flags);
  auto* verify_info = app.add_subcommand("verify-info", "information inequality suite");
  add_common(verify_info, info_flags);
  auto* directsum = app.add_subcommand("directsum", "direct-sum loss audit");
  add_common(directsum, directsum_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitSpec;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(simulate_flags);
    if (tradeoff->parsed()) return cmd_tradeoff(tradeoff_flags);
    if (verify_info->parsed()) return cmd_verify_info(info_flags);
    if (directsum->parsed()) return cmd_directsum(directsum_flags);
  } catch (const SpecError& e) {
    std::fprintf(stderr, "spec error: %s\n", e.what());
    return kExitSpec;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitSpec;
}
