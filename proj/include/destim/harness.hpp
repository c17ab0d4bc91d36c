#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "destim/core.hpp"
#include "destim/protocols.hpp"

namespace destim {

struct StatsSummary {
  double mean = 0.0;
  double stderr_ = 0.0;
  double ci95_lo = 0.0;
  double ci95_hi = 0.0;
  long long count = 0;
};

StatsSummary summarize(const std::vector<double>& values);

struct TrialRecord {
  long long trial = 0;
  std::uint64_t seed = 0;
  std::string protocol;
  int d = 0;
  int m = 0;
  int n = 0;
  double sigma2 = 0.0;
  double squared_error = 0.0;
  long long bits_used = 0;
  long long machines_used = 0;
  bool failed = false;
  std::vector<RoundDiag> rounds;  // bisection diagnostics
  ParameterVector theta;
};

using ThetaSampler = std::function<ParameterVector(Rng&)>;

ThetaSampler sampler_from_prior(const PriorSpec& prior, int d);

// Support uniform among size-s subsets, nonzero entries +-magnitude.
ThetaSampler sparse_support_sampler(int d, int s, double magnitude);

// One protocol wired for Monte Carlo execution. `run` receives the drawn
// theta, the trial's randomness model and the trial's public stream.
struct ProtocolSetup {
  std::string name;
  ExperimentConfig config;
  long long expected_bits = -1;  // cross-checked every trial when >= 0
  std::function<ProtocolResult(const ParameterVector&, const RandomnessModel&, Rng&)> run;
  std::function<ParameterVector(const Transcript&)> rederive;  // optional
  bool keep_rounds = false;
  bool keep_theta = false;
};

ProtocolSetup make_averaging(const ExperimentConfig& config, bool quantized);
ProtocolSetup make_sparse(const ExperimentConfig& config, const SparseParams& params,
                          bool quantized = true);
// `literal` runs the per-machine reference implementation; the default uses
// the aggregated per-round kernel.
ProtocolSetup make_bisection(const ExperimentConfig& config, bool literal = false);

InnerProtocol inner_averaging(const ExperimentConfig& config,
                              const std::optional<FixedPointCodec>& codec);
InnerProtocol inner_sparse(const ExperimentConfig& config, const SparseParams& params,
                           const std::optional<FixedPointCodec>& codec);

struct RiskResult {
  StatsSummary mse;
  StatsSummary bits;
  std::vector<TrialRecord> records;
  long long failed_trials = 0;
};

// Per trial: draw theta, run the protocol, record squared error and bits.
// Trials are independent work units keyed by (master_seed, trial index);
// records are written at their trial index so the output is identical for
// any job count. jobs <= 1 runs the serial reference loop.
RiskResult estimate_risk(const ProtocolSetup& setup, const ThetaSampler& prior,
                         long long trials, std::uint64_t master_seed, int jobs);

RiskResult estimate_risk(const ProtocolSetup& setup, const PriorSpec& prior,
                         long long trials, std::uint64_t master_seed, int jobs);

struct GridRiskResult {
  std::vector<std::pair<ParameterVector, StatsSummary>> per_point;
  ParameterVector worst_theta;
  StatsSummary worst;
};

GridRiskResult minimax_risk_over_grid(const ProtocolSetup& setup,
                                      const std::vector<ParameterVector>& grid,
                                      long long trials, std::uint64_t master_seed,
                                      int jobs);

struct TradeoffPoint {
  double alpha = 0.0;
  StatsSummary mse;
  StatsSummary bits;
  double cost_risk_product = 0.0;
};

std::vector<TradeoffPoint> tradeoff_sweep_sparse(const ExperimentConfig& config,
                                                 int s, const std::vector<double>& alphas,
                                                 long long trials,
                                                 std::uint64_t master_seed, int jobs);

enum class InnerKind { Averaging, SparseThreshold };

struct DirectSumReport {
  std::vector<double> per_coordinate_mse;
  double sum_coordinate_mse = 0.0;
  double full_mse = 0.0;
  double ratio = 0.0;
  double ratio_ci95_lo = 0.0;
  double ratio_ci95_hi = 0.0;
  int best_coordinate = -1;
  bool best_coordinate_within_4_over_d = false;
};

DirectSumReport directsum_audit(InnerKind inner, const PriorSpec& per_coord_prior,
                                const ExperimentConfig& config,
                                const SparseParams& sparse_params, long long trials,
                                std::uint64_t master_seed, int jobs);

struct RoundFailureReport {
  int round = 0;
  double failure_budget = 0.0;
  long long conditioning_trials = 0;
  long long failures = 0;
  double rate = 0.0;
  double upper_bound = 0.0;
  bool conclusive = false;
  bool within_budget = false;
};

// Per-round conditional failure audit of the bisection protocol: among
// trials where theta was still inside the interval entering round s, the
// fraction that leave it, with a one-sided Clopper-Pearson upper bound.
std::vector<RoundFailureReport> failure_rate_bisection(
    const ExperimentConfig& config, const PriorSpec& prior, long long trials,
    std::uint64_t master_seed, int jobs, double confidence = 0.99,
    long long min_conditioning = 1000);

// One-sided Clopper-Pearson upper confidence bound on a binomial proportion.
double binomial_upper_bound(long long successes, long long trials, double confidence);

inline constexpr int kTrialSchemaVersion = 1;

void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records);

}  // namespace destim
