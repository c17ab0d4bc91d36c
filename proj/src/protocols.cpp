#include "destim/protocols.hpp"

#include <bit>
#include <cmath>
#include <cstdint>

namespace destim {

namespace {

ParameterVector average_decoded(const ExperimentConfig& config,
                                const Transcript& transcript,
                                const std::optional<FixedPointCodec>& codec,
                                long long machines) {
  ParameterVector avg(static_cast<std::size_t>(config.d), 0.0);
  if (static_cast<long long>(transcript.messages.size()) != machines)
    throw std::invalid_argument("transcript: unexpected message count");
  for (const auto& msg : transcript.messages) {
    for (int i = 0; i < config.d; ++i) {
      double x;
      if (codec) {
        x = decode(msg.read_bits(static_cast<long long>(i) * codec->bits, codec->bits),
                   *codec);
      } else {
        x = std::bit_cast<double>(msg.read_bits(static_cast<long long>(i) * 64, 64));
      }
      avg[static_cast<std::size_t>(i)] += x;
    }
  }
  for (auto& x : avg) x /= static_cast<double>(machines);
  return avg;
}

Transcript write_means(const ExperimentConfig& config, const MeanMatrix& means,
                       long long machines,
                       const std::optional<FixedPointCodec>& codec) {
  Transcript transcript;
  for (long long j = 0; j < machines; ++j) {
    Message msg;
    msg.machine_id = static_cast<int>(j);
    msg.round = 0;
    for (int i = 0; i < config.d; ++i) {
      const double x = means.at(j, i);
      if (codec)
        msg.append_bits(encode(x, *codec), codec->bits);
      else
        msg.append_bits(std::bit_cast<std::uint64_t>(x), 64);
    }
    transcript.push(std::move(msg));
  }
  return transcript;
}

}  // namespace

long long BisectionSchedule::total_machines() const {
  long long total = 0;
  for (const auto& r : rounds) total += r.machines;
  return total;
}

ProtocolResult run_simultaneous_mean(const ExperimentConfig& config,
                                     const MeanMatrix& means,
                                     const std::optional<FixedPointCodec>& codec) {
  config.validate();
  if (means.d != config.d) throw std::invalid_argument("simultaneous: dimension mismatch");
  if (means.machines != config.m)
    throw std::invalid_argument("simultaneous: pool must have exactly m machines");
  ProtocolResult result;
  result.transcript = write_means(config, means, config.m, codec);
  result.estimate = average_decoded(config, result.transcript, codec, config.m);
  result.machines_used = config.m;
  return result;
}

ParameterVector rederive_simultaneous(const ExperimentConfig& config,
                                      const Transcript& transcript,
                                      const std::optional<FixedPointCodec>& codec) {
  return average_decoded(config, transcript, codec, config.m);
}

long long sparse_pool_size(const ExperimentConfig& config, const SparseParams& params) {
  config.validate();
  if (config.d < 2) throw std::invalid_argument("sparse: d must be at least 2");
  if (params.s < 1 || params.s > config.d)
    throw std::invalid_argument("sparse: s out of range");
  const double dmax = static_cast<double>(config.d) / params.s;
  if (params.alpha < 1.0 || params.alpha > dmax)
    throw std::invalid_argument("sparse: alpha must lie in [1, d/s]");
  return static_cast<long long>(
      std::ceil(params.L_const * config.m * std::log2(static_cast<double>(config.d)) /
                params.alpha));
}

ProtocolResult run_sparse_threshold(const ExperimentConfig& config,
                                    const SparseParams& params,
                                    const MeanMatrix& means,
                                    const std::optional<FixedPointCodec>& codec) {
  const long long pool = sparse_pool_size(config, params);
  if (means.d != config.d) throw std::invalid_argument("sparse: dimension mismatch");
  if (means.machines < pool)
    throw InsufficientMachines("sparse: pool smaller than ceil(L*m*log2(d)/alpha)");
  ProtocolResult result;
  result.transcript = write_means(config, means, pool, codec);
  result.estimate = rederive_sparse(config, params, result.transcript, codec);
  result.machines_used = pool;
  return result;
}

ParameterVector rederive_sparse(const ExperimentConfig& config,
                                const SparseParams& params,
                                const Transcript& transcript,
                                const std::optional<FixedPointCodec>& codec) {
  const long long pool = sparse_pool_size(config, params);
  ParameterVector avg = average_decoded(config, transcript, codec, pool);
  const double threshold =
      params.alpha * config.sigma2 / (static_cast<double>(config.m) * config.n);
  for (auto& x : avg)
    if (x * x < threshold) x = 0.0;
  return avg;
}

BisectionSchedule bisection_schedule(int m, int n, double sigma2) {
  if (m < 2) throw std::invalid_argument("bisection: m must be at least 2");
  if (n < 1 || !(sigma2 > 0.0)) throw std::invalid_argument("bisection: bad n/sigma2");
  BisectionSchedule schedule;
  const double stop = 1.0 / std::sqrt(static_cast<double>(m));
  const double p0 = 0.1 * std::pow(static_cast<double>(m), -1.5);
  int s = 0;
  for (;;) {
    const double t = 2.0 * std::pow(0.75, s);
    if (t < stop) break;
    const double p = p0 * std::pow(4.0 / 3.0, 3 * s);
    long long machines = static_cast<long long>(
        std::ceil(50.0 * std::log(2.0 / p) * (static_cast<double>(n) / sigma2) / (t * t)));
    if (machines % 2 == 0) ++machines;  // odd counts rule out majority ties
    schedule.rounds.push_back({s, t, p, machines});
    ++s;
  }
  return schedule;
}

namespace {

// Core interval loop shared by the literal and aggregated runs. `draw_ones`
// yields the number of '1' bits among the round's machines and appends the
// round's messages to the transcript.
ProtocolResult bisect_core(
    const BisectionSchedule& schedule,
    const std::function<long long(const BisectionRound&, double a, long long first_machine,
                                  Transcript&)>& draw_ones) {
  ProtocolResult result;
  double lower = -1.0, upper = 1.0;
  long long cursor = 0;
  for (const auto& round : schedule.rounds) {
    const double a = 0.5 * (upper + lower);
    const long long ones = draw_ones(round, a, cursor, result.transcript);
    cursor += round.machines;
    const bool majority_one = 2 * ones > round.machines;
    if (majority_one)
      lower = 0.5 * (lower + a);
    else
      upper = 0.5 * (upper + a);
    result.rounds.push_back(
        {round.s, lower, upper, a, round.machines, ones, majority_one});
  }
  result.estimate = {lower};
  result.machines_used = cursor;
  return result;
}

}  // namespace

ProtocolResult run_interactive_bisection_1d(const ExperimentConfig& config,
                                            const MeanMatrix& pool,
                                            const BisectionSchedule& schedule) {
  config.validate();
  if (pool.d != 1) throw std::invalid_argument("bisection 1d: pool must be 1-dimensional");
  if (pool.machines < schedule.total_machines())
    throw InsufficientMachines("bisection: pool exhausted");
  return bisect_core(schedule, [&](const BisectionRound& round, double a,
                                   long long first, Transcript& transcript) {
    long long ones = 0;
    for (long long j = 0; j < round.machines; ++j) {
      const bool one = pool.at(first + j, 0) >= a;
      ones += one ? 1 : 0;
      Message msg;
      msg.machine_id = static_cast<int>(first + j);
      msg.round = round.s;
      msg.append_bits(one ? 1u : 0u, 1);
      transcript.push(std::move(msg));
    }
    return ones;
  });
}

ProtocolResult run_interactive_bisection_1d_fast(const ExperimentConfig& config,
                                                 double theta,
                                                 const BisectionSchedule& schedule,
                                                 Rng& noise_rng) {
  config.validate();
  const double mean_sd = std::sqrt(config.sigma2 / config.n);
  return bisect_core(schedule, [&](const BisectionRound& round, double a,
                                   long long first, Transcript& transcript) {
    const double q = normal_cdf((theta - a) / mean_sd);
    const long long ones = noise_rng.next_binomial(round.machines, q);
    Message msg;
    msg.machine_id = static_cast<int>(first);
    msg.round = round.s;
    msg.append_run(ones, round.machines);
    transcript.push(std::move(msg));
    return ones;
  });
}

ProtocolResult run_interactive_bisection(const ExperimentConfig& config,
                                         const MeanMatrix& pool,
                                         const BisectionSchedule& schedule) {
  config.validate();
  if (pool.d != config.d) throw std::invalid_argument("bisection: dimension mismatch");
  if (pool.machines < schedule.total_machines())
    throw InsufficientMachines("bisection: pool exhausted");
  ProtocolResult result;
  result.estimate.resize(static_cast<std::size_t>(config.d));
  for (int i = 0; i < config.d; ++i) {
    MeanMatrix column;
    column.machines = pool.machines;
    column.d = 1;
    column.v.resize(static_cast<std::size_t>(pool.machines));
    for (long long j = 0; j < pool.machines; ++j) column.v[j] = pool.at(j, i);
    ExperimentConfig one = config;
    one.d = 1;
    ProtocolResult coord = run_interactive_bisection_1d(one, column, schedule);
    result.estimate[static_cast<std::size_t>(i)] = coord.estimate[0];
    for (auto& msg : coord.transcript.messages)
      result.transcript.push(std::move(msg));
    for (const auto& diag : coord.rounds) result.rounds.push_back(diag);
  }
  result.machines_used = schedule.total_machines();
  return result;
}

ProtocolResult run_interactive_bisection_fast(const ExperimentConfig& config,
                                              const ParameterVector& theta,
                                              const BisectionSchedule& schedule,
                                              const RandomnessModel& rnd) {
  config.validate();
  if (static_cast<int>(theta.size()) != config.d)
    throw std::invalid_argument("bisection fast: theta dimension mismatch");
  ProtocolResult result;
  result.estimate.resize(static_cast<std::size_t>(config.d));
  ExperimentConfig one = config;
  one.d = 1;
  for (int i = 0; i < config.d; ++i) {
    Rng noise = Rng::derive(rnd.master_seed, stream_tag::kNoise,
                            static_cast<std::uint64_t>(i));
    ProtocolResult coord = run_interactive_bisection_1d_fast(
        one, theta[static_cast<std::size_t>(i)], schedule, noise);
    result.estimate[static_cast<std::size_t>(i)] = coord.estimate[0];
    for (auto& msg : coord.transcript.messages)
      result.transcript.push(std::move(msg));
    for (const auto& diag : coord.rounds) result.rounds.push_back(diag);
  }
  result.machines_used = schedule.total_machines();
  return result;
}

ParameterVector rederive_bisection(const ExperimentConfig& config,
                                   const BisectionSchedule& schedule,
                                   const Transcript& transcript) {
  ParameterVector estimate(static_cast<std::size_t>(config.d));
  std::size_t msg_idx = 0;
  for (int i = 0; i < config.d; ++i) {
    double lower = -1.0, upper = 1.0;
    for (const auto& round : schedule.rounds) {
      long long seen = 0, ones = 0;
      while (seen < round.machines) {
        if (msg_idx >= transcript.messages.size())
          throw std::invalid_argument("rederive: transcript too short");
        const Message& msg = transcript.messages[msg_idx++];
        seen += msg.bit_len;
        ones += msg.popcount();
      }
      if (seen != round.machines)
        throw std::invalid_argument("rederive: round bit count mismatch");
      const double a = 0.5 * (upper + lower);
      if (2 * ones > round.machines)
        lower = 0.5 * (lower + a);
      else
        upper = 0.5 * (upper + a);
    }
    estimate[static_cast<std::size_t>(i)] = lower;
  }
  if (msg_idx != transcript.messages.size())
    throw std::invalid_argument("rederive: trailing transcript messages");
  return estimate;
}

ProtocolResult embed_direct_sum(const InnerProtocol& inner, int coord,
                                const MeanMatrix& one_dim_means,
                                const PriorSpec& per_coord_prior,
                                Rng& public_rng, const RandomnessModel& rnd) {
  const int d = inner.config.d;
  if (coord < 0 || coord >= d) throw std::invalid_argument("embed: coordinate out of range");
  if (one_dim_means.d != 1)
    throw std::invalid_argument("embed: expected 1-dimensional data");
  if (one_dim_means.machines < inner.machines_needed)
    throw InsufficientMachines("embed: pool smaller than the inner protocol needs");

  if (d == 1) {
    ProtocolResult result = inner.run(one_dim_means);
    return result;
  }

  // Publicly draw the other coordinates' means, then privately fill their
  // sample means per machine (mean-sufficient form of the per-sample fill).
  const ParameterVector other = draw_parameter(per_coord_prior, d - 1, public_rng);
  MeanMatrix composed;
  composed.machines = one_dim_means.machines;
  composed.d = d;
  composed.v.resize(static_cast<std::size_t>(composed.machines) * d);
  const double mean_sd = std::sqrt(inner.config.sigma2 / inner.config.n);
  for (long long j = 0; j < composed.machines; ++j) {
    Rng priv = Rng::derive(rnd.master_seed, stream_tag::kNoise,
                           static_cast<std::uint64_t>(j));
    for (int i = 0; i < d; ++i) {
      if (i == coord) {
        composed.at(j, i) = one_dim_means.at(j, 0);
      } else {
        const int oi = i < coord ? i : i - 1;
        composed.at(j, i) =
            other[static_cast<std::size_t>(oi)] + mean_sd * priv.next_gaussian();
      }
    }
  }
  ProtocolResult full = inner.run(composed);
  ProtocolResult result;
  result.transcript = std::move(full.transcript);
  result.estimate = {full.estimate[static_cast<std::size_t>(coord)]};
  result.machines_used = full.machines_used;
  return result;
}

}  // namespace destim
