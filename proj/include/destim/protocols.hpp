#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "destim/bitcodec.hpp"
#include "destim/core.hpp"

namespace destim {

// Thrown when a protocol would need more machines than its pool provides.
// Silent reuse would break the independence assumptions of the analysis.
class InsufficientMachines : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RoundDiag {
  int round = 0;
  double lower_after = 0.0;
  double upper_after = 0.0;
  double midpoint = 0.0;
  long long machines = 0;
  long long ones = 0;
  bool majority_one = false;
};

struct ProtocolResult {
  Transcript transcript;
  ParameterVector estimate;
  long long machines_used = 0;
  std::vector<RoundDiag> rounds;  // bisection only
};

struct BisectionRound {
  int s = 0;
  double interval_width = 0.0;  // t_s = 2*(3/4)^s before the round runs
  double failure_budget = 0.0;  // p_s = 0.1*m^{-3/2}*(4/3)^{3s}
  long long machines = 0;       // odd, ceil(50*ln(2/p_s)*(n/sigma2)/t_s^2)
};

struct BisectionSchedule {
  std::vector<BisectionRound> rounds;
  long long total_machines() const;
};

struct SparseParams {
  int s = 1;
  double alpha = 1.0;
  double L_const = 4.0;
};

// ---- simultaneous averaging -------------------------------------------------

// Each of the config.m machines writes its d quantized sample-mean
// coordinates; the estimate is the average of the decoded means. With no
// codec the raw 64-bit values are written instead (debug mode).
ProtocolResult run_simultaneous_mean(const ExperimentConfig& config,
                                     const MeanMatrix& means,
                                     const std::optional<FixedPointCodec>& codec);

ParameterVector rederive_simultaneous(const ExperimentConfig& config,
                                      const Transcript& transcript,
                                      const std::optional<FixedPointCodec>& codec);

// ---- sparse thresholding ----------------------------------------------------

// Pool size m' = ceil(L_const * m * log2(d) / alpha).
long long sparse_pool_size(const ExperimentConfig& config, const SparseParams& params);

// m' machines send quantized means; the center averages and zeroes every
// coordinate with mean^2 below alpha*sigma2/(m*n).
ProtocolResult run_sparse_threshold(const ExperimentConfig& config,
                                    const SparseParams& params,
                                    const MeanMatrix& means,
                                    const std::optional<FixedPointCodec>& codec);

ParameterVector rederive_sparse(const ExperimentConfig& config,
                                const SparseParams& params,
                                const Transcript& transcript,
                                const std::optional<FixedPointCodec>& codec);

// ---- interactive bisection --------------------------------------------------

BisectionSchedule bisection_schedule(int m, int n, double sigma2);

// Literal execution: each fresh machine writes one sign bit per round.
// The pool holds one column of sample means (d == 1).
ProtocolResult run_interactive_bisection_1d(const ExperimentConfig& config,
                                            const MeanMatrix& pool,
                                            const BisectionSchedule& schedule);

// Aggregated execution: per round the count of '1' bits is drawn exactly as
// Binomial(machines_s, P(sample mean >= a)), which is the same distribution
// the literal run induces; the payload packs the bits in machine order with
// the ones first. One message per round.
ProtocolResult run_interactive_bisection_1d_fast(const ExperimentConfig& config,
                                                 double theta,
                                                 const BisectionSchedule& schedule,
                                                 Rng& noise_rng);

// d-dimensional version: the 1-d protocol per coordinate, reusing the same
// machine pool across coordinates (fresh machines within a coordinate).
ProtocolResult run_interactive_bisection(const ExperimentConfig& config,
                                         const MeanMatrix& pool,
                                         const BisectionSchedule& schedule);

ProtocolResult run_interactive_bisection_fast(const ExperimentConfig& config,
                                              const ParameterVector& theta,
                                              const BisectionSchedule& schedule,
                                              const RandomnessModel& rnd);

// Replays the interval updates from transcript bits alone.
ParameterVector rederive_bisection(const ExperimentConfig& config,
                                   const BisectionSchedule& schedule,
                                   const Transcript& transcript);

// ---- direct-sum embedding ---------------------------------------------------

struct InnerProtocol {
  ExperimentConfig config;  // d-dimensional
  long long machines_needed = 0;
  std::function<ProtocolResult(const MeanMatrix&)> run;
  std::function<ParameterVector(const Transcript&)> rederive;
};

// Embeds a 1-d instance into coordinate `coord` of the inner d-dimensional
// protocol: the other means are drawn publicly from the per-coordinate prior
// and their data privately per machine. Returns the inner transcript and the
// scalar estimate (coordinate `coord` of the inner estimator).
ProtocolResult embed_direct_sum(const InnerProtocol& inner, int coord,
                                const MeanMatrix& one_dim_means,
                                const PriorSpec& per_coord_prior,
                                Rng& public_rng, const RandomnessModel& rnd);

}  // namespace destim
