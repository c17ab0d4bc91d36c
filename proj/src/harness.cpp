#include "destim/harness.hpp"

#include <algorithm>
#include <boost/math/distributions/beta.hpp>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace destim {

StatsSummary summarize(const std::vector<double>& values) {
  StatsSummary s;
  s.count = static_cast<long long>(values.size());
  if (s.count == 0) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / s.count;
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    const double sd = std::sqrt(ss / (s.count - 1));
    s.stderr_ = sd / std::sqrt(static_cast<double>(s.count));
  }
  s.ci95_lo = s.mean - 1.96 * s.stderr_;
  s.ci95_hi = s.mean + 1.96 * s.stderr_;
  return s;
}

ThetaSampler sampler_from_prior(const PriorSpec& prior, int d) {
  return [prior, d](Rng& rng) { return draw_parameter(prior, d, rng); };
}

ThetaSampler sparse_support_sampler(int d, int s, double magnitude) {
  if (s < 1 || s > d) throw std::invalid_argument("sparse sampler: bad s");
  return [d, s, magnitude](Rng& rng) {
    ParameterVector theta(static_cast<std::size_t>(d), 0.0);
    // Floyd's algorithm for a uniform size-s subset.
    std::vector<int> chosen;
    for (int j = d - s; j < d; ++j) {
      int t = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(j) + 1));
      if (std::find(chosen.begin(), chosen.end(), t) != chosen.end()) t = j;
      chosen.push_back(t);
    }
    for (int idx : chosen)
      theta[static_cast<std::size_t>(idx)] =
          (rng.next_u64() & 1u) ? magnitude : -magnitude;
    return theta;
  };
}

ProtocolSetup make_averaging(const ExperimentConfig& config, bool quantized) {
  config.validate();
  std::optional<FixedPointCodec> codec;
  if (quantized) codec = default_mean_codec(config);
  ProtocolSetup setup;
  setup.name = quantized ? "averaging" : "averaging_unquantized";
  setup.config = config;
  const long long per_coord = quantized ? codec->bits : 64;
  setup.expected_bits = static_cast<long long>(config.m) * config.d * per_coord;
  setup.run = [config, codec](const ParameterVector& theta, const RandomnessModel& rnd,
                              Rng&) {
    const MeanMatrix means =
        sample_machine_means(theta, config.m, config.n, config.sigma2, rnd);
    return run_simultaneous_mean(config, means, codec);
  };
  setup.rederive = [config, codec](const Transcript& t) {
    return rederive_simultaneous(config, t, codec);
  };
  return setup;
}

ProtocolSetup make_sparse(const ExperimentConfig& config, const SparseParams& params,
                          bool quantized) {
  const long long pool = sparse_pool_size(config, params);
  std::optional<FixedPointCodec> codec;
  if (quantized) codec = default_mean_codec(config);
  ProtocolSetup setup;
  setup.name = "sparse_threshold";
  setup.config = config;
  const long long per_coord = quantized ? codec->bits : 64;
  setup.expected_bits = pool * config.d * per_coord;
  setup.run = [config, params, codec, pool](const ParameterVector& theta,
                                            const RandomnessModel& rnd, Rng&) {
    const MeanMatrix means =
        sample_machine_means(theta, pool, config.n, config.sigma2, rnd);
    return run_sparse_threshold(config, params, means, codec);
  };
  setup.rederive = [config, params, codec](const Transcript& t) {
    return rederive_sparse(config, params, t, codec);
  };
  return setup;
}

ProtocolSetup make_bisection(const ExperimentConfig& config, bool literal) {
  config.validate();
  const BisectionSchedule schedule =
      bisection_schedule(config.m, config.n, config.sigma2);
  ProtocolSetup setup;
  setup.name = literal ? "bisection_literal" : "bisection";
  setup.config = config;
  setup.expected_bits = static_cast<long long>(config.d) * schedule.total_machines();
  setup.keep_rounds = true;
  if (literal) {
    setup.run = [config, schedule](const ParameterVector& theta,
                                   const RandomnessModel& rnd, Rng&) {
      const MeanMatrix pool = sample_machine_means(
          theta, schedule.total_machines(), config.n, config.sigma2, rnd);
      return run_interactive_bisection(config, pool, schedule);
    };
  } else {
    setup.run = [config, schedule](const ParameterVector& theta,
                                   const RandomnessModel& rnd, Rng&) {
      return run_interactive_bisection_fast(config, theta, schedule, rnd);
    };
  }
  setup.rederive = [config, schedule](const Transcript& t) {
    return rederive_bisection(config, schedule, t);
  };
  return setup;
}

InnerProtocol inner_averaging(const ExperimentConfig& config,
                              const std::optional<FixedPointCodec>& codec) {
  InnerProtocol inner;
  inner.config = config;
  inner.machines_needed = config.m;
  inner.run = [config, codec](const MeanMatrix& means) {
    return run_simultaneous_mean(config, means, codec);
  };
  inner.rederive = [config, codec](const Transcript& t) {
    return rederive_simultaneous(config, t, codec);
  };
  return inner;
}

InnerProtocol inner_sparse(const ExperimentConfig& config, const SparseParams& params,
                           const std::optional<FixedPointCodec>& codec) {
  InnerProtocol inner;
  inner.config = config;
  inner.machines_needed = sparse_pool_size(config, params);
  inner.run = [config, params, codec](const MeanMatrix& means) {
    return run_sparse_threshold(config, params, means, codec);
  };
  inner.rederive = [config, params, codec](const Transcript& t) {
    return rederive_sparse(config, params, t, codec);
  };
  return inner;
}

namespace {

void run_one_trial(const ProtocolSetup& setup, const ThetaSampler& prior,
                   std::uint64_t master_seed, long long t, TrialRecord& rec) {
  const RandomnessModel master{master_seed};
  const RandomnessModel trial_rnd = master.for_trial(t);
  rec.trial = t;
  rec.seed = trial_rnd.master_seed;
  rec.protocol = setup.name;
  rec.d = setup.config.d;
  rec.m = setup.config.m;
  rec.n = setup.config.n;
  rec.sigma2 = setup.config.sigma2;
  Rng pub = trial_rnd.public_stream();
  const ParameterVector theta = prior(pub);
  try {
    ProtocolResult result = setup.run(theta, trial_rnd, pub);
    double sq = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double e = result.estimate[i] - theta[i];
      sq += e * e;
    }
    rec.squared_error = sq;
    rec.bits_used = transcript_cost(result.transcript);
    rec.machines_used = result.machines_used;
    if (setup.expected_bits >= 0 && rec.bits_used != setup.expected_bits)
      throw std::logic_error("trial: bits_used deviates from the budget formula");
    if (setup.rederive) {
      const ParameterVector replay = setup.rederive(result.transcript);
      if (replay != result.estimate)
        throw std::logic_error("trial: estimate not re-derivable from transcript");
    }
    if (setup.keep_rounds) rec.rounds = std::move(result.rounds);
  } catch (const InsufficientMachines&) {
    rec.failed = true;
  }
  if (setup.keep_theta || setup.keep_rounds) rec.theta = theta;
}

}  // namespace

RiskResult estimate_risk(const ProtocolSetup& setup, const ThetaSampler& prior,
                         long long trials, std::uint64_t master_seed, int jobs) {
  if (trials < 1) throw std::invalid_argument("estimate_risk: trials must be positive");
  RiskResult out;
  out.records.resize(static_cast<std::size_t>(trials));
  if (jobs <= 1) {
    // Serial reference path; identical output by construction.
    for (long long t = 0; t < trials; ++t)
      run_one_trial(setup, prior, master_seed, t,
                    out.records[static_cast<std::size_t>(t)]);
  } else {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 64) num_threads(jobs)
#endif
    for (long long t = 0; t < trials; ++t)
      run_one_trial(setup, prior, master_seed, t,
                    out.records[static_cast<std::size_t>(t)]);
  }
  std::vector<double> sq, bits;
  sq.reserve(out.records.size());
  bits.reserve(out.records.size());
  for (const auto& rec : out.records) {
    if (rec.failed) {
      ++out.failed_trials;
      continue;
    }
    sq.push_back(rec.squared_error);
    bits.push_back(static_cast<double>(rec.bits_used));
  }
  out.mse = summarize(sq);
  out.bits = summarize(bits);
  return out;
}

RiskResult estimate_risk(const ProtocolSetup& setup, const PriorSpec& prior,
                         long long trials, std::uint64_t master_seed, int jobs) {
  return estimate_risk(setup, sampler_from_prior(prior, setup.config.d), trials,
                       master_seed, jobs);
}

GridRiskResult minimax_risk_over_grid(const ProtocolSetup& setup,
                                      const std::vector<ParameterVector>& grid,
                                      long long trials, std::uint64_t master_seed,
                                      int jobs) {
  if (grid.empty()) throw std::invalid_argument("minimax grid: empty grid");
  GridRiskResult out;
  std::uint64_t point_seed = master_seed;
  for (const auto& theta : grid) {
    const RiskResult r = estimate_risk(setup, PriorSpec::point_mass(theta), trials,
                                       point_seed, jobs);
    out.per_point.emplace_back(theta, r.mse);
    if (out.worst_theta.empty() || r.mse.mean > out.worst.mean) {
      out.worst = r.mse;
      out.worst_theta = theta;
    }
    point_seed = Rng(point_seed).next_u64();
  }
  return out;
}

std::vector<TradeoffPoint> tradeoff_sweep_sparse(const ExperimentConfig& config,
                                                 int s, const std::vector<double>& alphas,
                                                 long long trials,
                                                 std::uint64_t master_seed, int jobs) {
  if (alphas.empty()) throw std::invalid_argument("tradeoff: empty alpha list");
  std::vector<TradeoffPoint> out;
  const ThetaSampler prior = sparse_support_sampler(config.d, s, 1.0);
  for (double alpha : alphas) {
    SparseParams params{s, alpha, 4.0};
    const ProtocolSetup setup = make_sparse(config, params);
    const RiskResult r = estimate_risk(setup, prior, trials, master_seed, jobs);
    TradeoffPoint point;
    point.alpha = alpha;
    point.mse = r.mse;
    point.bits = r.bits;
    point.cost_risk_product = r.mse.mean * r.bits.mean;
    out.push_back(point);
  }
  return out;
}

namespace {

ProtocolSetup make_embedded(InnerKind kind, const ExperimentConfig& config,
                            const SparseParams& sparse_params,
                            const PriorSpec& per_coord_prior, int coord) {
  const auto codec = default_mean_codec(config);
  InnerProtocol inner = kind == InnerKind::Averaging
                            ? inner_averaging(config, codec)
                            : inner_sparse(config, sparse_params, codec);
  ProtocolSetup setup;
  setup.name = "directsum_embedded";
  ExperimentConfig one = config;
  one.d = 1;
  setup.config = one;
  setup.expected_bits = inner.machines_needed * config.d * codec.bits;
  setup.run = [inner, per_coord_prior, coord](const ParameterVector& theta,
                                              const RandomnessModel& rnd, Rng& pub) {
    const MeanMatrix one_dim = sample_machine_means(
        theta, inner.machines_needed, inner.config.n, inner.config.sigma2, rnd);
    return embed_direct_sum(inner, coord, one_dim, per_coord_prior, pub, rnd);
  };
  return setup;
}

}  // namespace

DirectSumReport directsum_audit(InnerKind kind, const PriorSpec& per_coord_prior,
                                const ExperimentConfig& config,
                                const SparseParams& sparse_params, long long trials,
                                std::uint64_t master_seed, int jobs) {
  config.validate();
  DirectSumReport report;

  ProtocolSetup full_setup;
  if (kind == InnerKind::Averaging) {
    full_setup = make_averaging(config, true);
  } else {
    full_setup = make_sparse(config, sparse_params);
  }
  const RiskResult full =
      estimate_risk(full_setup, per_coord_prior, trials, master_seed, jobs);
  report.full_mse = full.mse.mean;

  double sum_var = 0.0;
  for (int i = 0; i < config.d; ++i) {
    const ProtocolSetup embedded =
        make_embedded(kind, config, sparse_params, per_coord_prior, i);
    const std::uint64_t coord_seed =
        Rng::derive(master_seed, 0x64697273756d0000ULL, static_cast<std::uint64_t>(i))
            .next_u64();
    const RiskResult r =
        estimate_risk(embedded, per_coord_prior, trials, coord_seed, jobs);
    report.per_coordinate_mse.push_back(r.mse.mean);
    report.sum_coordinate_mse += r.mse.mean;
    sum_var += r.mse.stderr_ * r.mse.stderr_;
  }
  report.ratio = report.sum_coordinate_mse / report.full_mse;
  const double rel =
      std::sqrt(sum_var / (report.sum_coordinate_mse * report.sum_coordinate_mse) +
                (full.mse.stderr_ * full.mse.stderr_) /
                    (report.full_mse * report.full_mse));
  report.ratio_ci95_lo = report.ratio * (1.0 - 1.96 * rel);
  report.ratio_ci95_hi = report.ratio * (1.0 + 1.96 * rel);

  const auto best = std::min_element(report.per_coordinate_mse.begin(),
                                     report.per_coordinate_mse.end());
  report.best_coordinate =
      static_cast<int>(best - report.per_coordinate_mse.begin());
  report.best_coordinate_within_4_over_d =
      *best <= (4.0 / config.d) * report.full_mse;
  return report;
}

std::vector<RoundFailureReport> failure_rate_bisection(
    const ExperimentConfig& config, const PriorSpec& prior, long long trials,
    std::uint64_t master_seed, int jobs, double confidence,
    long long min_conditioning) {
  if (config.d != 1)
    throw std::invalid_argument("failure audit: 1-dimensional config required");
  const BisectionSchedule schedule =
      bisection_schedule(config.m, config.n, config.sigma2);
  ProtocolSetup setup = make_bisection(config, false);
  setup.keep_theta = true;
  const RiskResult risk = estimate_risk(setup, prior, trials, master_seed, jobs);

  const std::size_t n_rounds = schedule.rounds.size();
  std::vector<long long> conditioning(n_rounds, 0), failures(n_rounds, 0);
  for (const auto& rec : risk.records) {
    if (rec.failed) continue;
    const double theta = rec.theta[0];
    bool inside = theta >= -1.0 && theta <= 1.0;  // E_0
    for (std::size_t s = 0; s < n_rounds; ++s) {
      const bool inside_after = theta >= rec.rounds[s].lower_after &&
                                theta <= rec.rounds[s].upper_after;
      if (inside) {
        ++conditioning[s];
        if (!inside_after) ++failures[s];
      }
      inside = inside_after;
    }
  }

  std::vector<RoundFailureReport> out;
  for (std::size_t s = 0; s < n_rounds; ++s) {
    RoundFailureReport r;
    r.round = static_cast<int>(s);
    r.failure_budget = schedule.rounds[s].failure_budget;
    r.conditioning_trials = conditioning[s];
    r.failures = failures[s];
    r.rate = conditioning[s] > 0
                 ? static_cast<double>(failures[s]) / conditioning[s]
                 : 0.0;
    r.conclusive = conditioning[s] >= min_conditioning;
    r.upper_bound = conditioning[s] > 0
                        ? binomial_upper_bound(failures[s], conditioning[s], confidence)
                        : 1.0;
    r.within_budget = r.upper_bound <= r.failure_budget;
    out.push_back(r);
  }
  return out;
}

double binomial_upper_bound(long long successes, long long trials, double confidence) {
  if (trials < 1 || successes < 0 || successes > trials)
    throw std::invalid_argument("binomial_upper_bound: bad counts");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw std::invalid_argument("binomial_upper_bound: bad confidence");
  if (successes == trials) return 1.0;
  const boost::math::beta_distribution<double> post(
      static_cast<double>(successes) + 1.0,
      static_cast<double>(trials - successes));
  return boost::math::quantile(post, confidence);
}

void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
  out << "trial,seed,protocol,d,m,n,sigma2,squared_error,bits_used,machines_used\n";
  char buf[512];
  for (const auto& rec : records) {
    std::snprintf(buf, sizeof buf, "%lld,%llu,%s,%d,%d,%d,%.17g,%.17g,%lld,%lld\n",
                  rec.trial, static_cast<unsigned long long>(rec.seed),
                  rec.protocol.c_str(), rec.d, rec.m, rec.n, rec.sigma2,
                  rec.squared_error, rec.bits_used, rec.machines_used);
    out << buf;
  }
}

}  // namespace destim
