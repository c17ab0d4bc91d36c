#include <cmath>
#include <doctest.h>
#include <stdexcept>

#include "destim/protocols.hpp"

using namespace destim;

namespace {

MeanMatrix matrix_from(std::vector<double> values, long long machines, int d) {
  MeanMatrix m;
  m.machines = machines;
  m.d = d;
  m.v = std::move(values);
  return m;
}

}  // namespace

TEST_CASE("simultaneous mean: noiseless estimate within half a cell") {
  const ExperimentConfig config{2, 4, 1, 1.0};
  const FixedPointCodec codec = default_mean_codec(config);
  const ParameterVector theta{0.3, -0.6};
  MeanMatrix means = matrix_from({0.3, -0.6, 0.3, -0.6, 0.3, -0.6, 0.3, -0.6}, 4, 2);
  const ProtocolResult result = run_simultaneous_mean(config, means, codec);
  REQUIRE(result.estimate.size() == 2);
  CHECK(std::fabs(result.estimate[0] - 0.3) <= codec.width() / 2);
  CHECK(std::fabs(result.estimate[1] + 0.6) <= codec.width() / 2);
  CHECK(result.machines_used == 4);
}

TEST_CASE("simultaneous mean: exact bit budget m*d*b") {
  const ExperimentConfig config{4, 10, 1, 1.0};
  const FixedPointCodec codec{-1.0, 1.0, 8};
  const RandomnessModel rnd{31};
  const MeanMatrix means = sample_machine_means({0, 0, 0, 0}, 10, 1, 1.0, rnd);
  const ProtocolResult result = run_simultaneous_mean(config, means, codec);
  CHECK(transcript_cost(result.transcript) == 320);  // m*d*b = 10*4*8
}

TEST_CASE("simultaneous mean: rederivable from the transcript alone") {
  const ExperimentConfig config{3, 7, 2, 0.5};
  const FixedPointCodec codec = default_mean_codec(config);
  const RandomnessModel rnd{32};
  const MeanMatrix means = sample_machine_means({0.1, -0.2, 0.4}, 7, 2, 0.5, rnd);
  SUBCASE("quantized") {
    const ProtocolResult result = run_simultaneous_mean(config, means, codec);
    CHECK(rederive_simultaneous(config, result.transcript, codec) == result.estimate);
  }
  SUBCASE("unquantized debug mode") {
    const ProtocolResult result = run_simultaneous_mean(config, means, std::nullopt);
    CHECK(rederive_simultaneous(config, result.transcript, std::nullopt) ==
          result.estimate);
    CHECK(transcript_cost(result.transcript) == 7 * 3 * 64);
  }
}

TEST_CASE("simultaneous mean rejects a mismatched pool") {
  const ExperimentConfig config{1, 4, 1, 1.0};
  const RandomnessModel rnd{33};
  const MeanMatrix means = sample_machine_means({0.0}, 5, 1, 1.0, rnd);
  CHECK_THROWS_AS(run_simultaneous_mean(config, means, std::nullopt),
                  std::invalid_argument);
}

TEST_CASE("sparse pool size formula and alpha validation") {
  const ExperimentConfig config{64, 32, 8, 1.0};
  // ceil(4 * 32 * log2(64) / alpha) = ceil(768/alpha)
  CHECK(sparse_pool_size(config, {4, 1.0, 4.0}) == 768);
  CHECK(sparse_pool_size(config, {4, 2.0, 4.0}) == 384);
  CHECK(sparse_pool_size(config, {4, 16.0, 4.0}) == 48);
  CHECK_THROWS_AS(sparse_pool_size(config, {4, 0.5, 4.0}), std::invalid_argument);
  CHECK_THROWS_AS(sparse_pool_size(config, {4, 17.0, 4.0}), std::invalid_argument);
}

TEST_CASE("sparse threshold rule") {
  SUBCASE("all-below-threshold means give the zero vector") {
    const ExperimentConfig config{2, 2, 1, 1.0};
    const SparseParams params{1, 1.0, 1.0};
    const long long pool = sparse_pool_size(config, params);
    // threshold = 1/(2*1) = 0.5 on squared means; means ~0.1 are zeroed.
    std::vector<double> v(static_cast<std::size_t>(pool) * 2, 0.1);
    const ProtocolResult result =
        run_sparse_threshold(config, params, matrix_from(v, pool, 2), std::nullopt);
    CHECK(result.estimate == ParameterVector{0.0, 0.0});
  }
  SUBCASE("threshold 0.01 keeps a coordinate at 0.15") {
    // sigma2=1, m=25, n=4, alpha=1 -> threshold alpha*sigma2/(mn) = 0.01.
    const ExperimentConfig config{2, 25, 4, 1.0};
    const SparseParams params{1, 1.0, 1.0};
    const long long pool = sparse_pool_size(config, params);
    std::vector<double> v;
    for (long long j = 0; j < pool; ++j) {
      v.push_back(0.15);  // 0.0225 >= 0.01: kept
      v.push_back(0.05);  // 0.0025 <  0.01: zeroed
    }
    const ProtocolResult result =
        run_sparse_threshold(config, params, matrix_from(v, pool, 2), std::nullopt);
    CHECK(result.estimate[0] == doctest::Approx(0.15));
    CHECK(result.estimate[1] == 0.0);
  }
}

TEST_CASE("sparse threshold: exact bits, pool exhaustion, rederivation") {
  const ExperimentConfig config{8, 4, 2, 1.0};
  const SparseParams params{2, 1.0, 4.0};
  const long long pool = sparse_pool_size(config, params);
  const FixedPointCodec codec = default_mean_codec(config);
  const RandomnessModel rnd{34};
  const ParameterVector theta{1, 0, 0, -1, 0, 0, 0, 0};
  const MeanMatrix means = sample_machine_means(theta, pool, 2, 1.0, rnd);
  const ProtocolResult result = run_sparse_threshold(config, params, means, codec);
  CHECK(transcript_cost(result.transcript) == pool * 8 * codec.bits);
  CHECK(result.machines_used == pool);
  CHECK(rederive_sparse(config, params, result.transcript, codec) == result.estimate);

  const MeanMatrix small = sample_machine_means(theta, pool - 1, 2, 1.0, rnd);
  CHECK_THROWS_AS(run_sparse_threshold(config, params, small, codec),
                  InsufficientMachines);
}

TEST_CASE("bisection schedule matches the paper's constants") {
  const BisectionSchedule schedule = bisection_schedule(100, 1, 1.0);
  REQUIRE_FALSE(schedule.rounds.empty());
  CHECK(schedule.rounds[0].failure_budget == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(schedule.rounds.size() == 11);  // ceil(log_{4/3}(2*sqrt(100)))
  CHECK(schedule.rounds[0].interval_width == doctest::Approx(2.0));
  CHECK(schedule.rounds[1].interval_width == doctest::Approx(1.5));
  CHECK(schedule.rounds[2].interval_width == doctest::Approx(1.125));
  for (std::size_t s = 0; s + 1 < schedule.rounds.size(); ++s) {
    CHECK(schedule.rounds[s + 1].failure_budget / schedule.rounds[s].failure_budget ==
          doctest::Approx(std::pow(4.0 / 3.0, 3)).epsilon(1e-12));
  }
  for (const auto& round : schedule.rounds) {
    CHECK(round.machines % 2 == 1);
    CHECK(round.interval_width >= 1.0 / 10.0);  // 1/sqrt(m)
  }
  // Last excluded width is below the stop threshold.
  const double next_width =
      2.0 * std::pow(0.75, static_cast<double>(schedule.rounds.size()));
  CHECK(next_width < 0.1);
}

TEST_CASE("bisection round counts equal ceil(log_{4/3}(2 sqrt m))") {
  for (int m : {256, 1024, 4096}) {
    const BisectionSchedule schedule = bisection_schedule(m, 1, 1.0);
    const int expected = static_cast<int>(
        std::ceil(std::log(2.0 * std::sqrt(static_cast<double>(m))) / std::log(4.0 / 3.0)));
    CHECK(static_cast<int>(schedule.rounds.size()) == expected);
  }
}

TEST_CASE("noiseless bisection converges to within 1/sqrt(m)") {
  const int m = 64;
  const ExperimentConfig config{1, m, 1, 1.0};
  const BisectionSchedule schedule = bisection_schedule(m, 1, 1.0);
  for (double theta : {0.7, -0.93, 0.0, 0.25}) {
    // Noiseless pool: every machine's sample mean is exactly theta.
    MeanMatrix pool;
    pool.machines = schedule.total_machines();
    pool.d = 1;
    pool.v.assign(static_cast<std::size_t>(pool.machines), theta);
    const ProtocolResult result = run_interactive_bisection_1d(config, pool, schedule);
    CHECK(std::fabs(result.estimate[0] - theta) <= 1.0 / std::sqrt(static_cast<double>(m)));
    // Interval invariant: U - L = 2*(3/4)^s after each round.
    for (const auto& diag : result.rounds) {
      CHECK(diag.upper_after - diag.lower_after ==
            doctest::Approx(2.0 * std::pow(0.75, diag.round + 1)).epsilon(1e-12));
    }
    CHECK(transcript_cost(result.transcript) == schedule.total_machines());
  }
}

TEST_CASE("bisection pool exhaustion is a hard error") {
  const ExperimentConfig config{1, 64, 1, 1.0};
  const BisectionSchedule schedule = bisection_schedule(64, 1, 1.0);
  MeanMatrix pool;
  pool.machines = schedule.total_machines() - 1;
  pool.d = 1;
  pool.v.assign(static_cast<std::size_t>(pool.machines), 0.0);
  CHECK_THROWS_AS(run_interactive_bisection_1d(config, pool, schedule),
                  InsufficientMachines);
}

TEST_CASE("literal and fast bisection agree in distribution") {
  // Same schedule, same bit budget; the MSEs over independent trials must
  // agree within joint Monte Carlo error.
  const int m = 64;
  const ExperimentConfig config{1, m, 1, 1.0};
  const BisectionSchedule schedule = bisection_schedule(m, 1, 1.0);
  const double theta = 0.31;
  const int trials = 3000;
  double lit_s1 = 0, lit_s2 = 0, fast_s1 = 0, fast_s2 = 0;
  for (int t = 0; t < trials; ++t) {
    const RandomnessModel rnd = RandomnessModel{777}.for_trial(t);
    const MeanMatrix pool =
        sample_machine_means({theta}, schedule.total_machines(), 1, 1.0, rnd);
    const ProtocolResult lit = run_interactive_bisection_1d(config, pool, schedule);
    Rng noise = Rng::derive(rnd.master_seed, stream_tag::kNoise, 0);
    ExperimentConfig one = config;
    const ProtocolResult fast =
        run_interactive_bisection_1d_fast(one, theta, schedule, noise);
    CHECK(transcript_cost(lit.transcript) == transcript_cost(fast.transcript));
    const double le = lit.estimate[0] - theta, fe = fast.estimate[0] - theta;
    lit_s1 += le * le;
    lit_s2 += le * le * le * le;
    fast_s1 += fe * fe;
    fast_s2 += fe * fe * fe * fe;
  }
  const double lit_mse = lit_s1 / trials, fast_mse = fast_s1 / trials;
  const double lit_se = std::sqrt((lit_s2 / trials - lit_mse * lit_mse) / trials);
  const double fast_se = std::sqrt((fast_s2 / trials - fast_mse * fast_mse) / trials);
  CHECK(std::fabs(lit_mse - fast_mse) <=
        4 * std::sqrt(lit_se * lit_se + fast_se * fast_se) + 1e-6);
}

TEST_CASE("bisection rederivation replays both execution modes") {
  const int m = 64;
  const ExperimentConfig config{1, m, 1, 1.0};
  const BisectionSchedule schedule = bisection_schedule(m, 1, 1.0);
  const RandomnessModel rnd{41};
  const MeanMatrix pool =
      sample_machine_means({-0.4}, schedule.total_machines(), 1, 1.0, rnd);
  const ProtocolResult lit = run_interactive_bisection_1d(config, pool, schedule);
  CHECK(rederive_bisection(config, schedule, lit.transcript) == lit.estimate);
  Rng noise = Rng::derive(41, stream_tag::kNoise, 0);
  const ProtocolResult fast =
      run_interactive_bisection_1d_fast(config, -0.4, schedule, noise);
  CHECK(rederive_bisection(config, schedule, fast.transcript) == fast.estimate);
}

TEST_CASE("d-dimensional bisection: determinism and bit additivity") {
  const int m = 64;
  const ExperimentConfig config{2, m, 1, 1.0};
  const BisectionSchedule schedule = bisection_schedule(m, 1, 1.0);
  const RandomnessModel rnd{42};
  const MeanMatrix pool =
      sample_machine_means({0.2, 0.2}, schedule.total_machines(), 1, 1.0, rnd);
  const ProtocolResult result = run_interactive_bisection(config, pool, schedule);
  REQUIRE(result.estimate.size() == 2);
  CHECK(transcript_cost(result.transcript) == 2 * schedule.total_machines());
  CHECK(rederive_bisection(config, schedule, result.transcript) == result.estimate);
  // Identical pool column and equal theta coordinates give identical
  // per-coordinate estimates when the columns carry the same values.
  MeanMatrix same;
  same.machines = pool.machines;
  same.d = 2;
  same.v.resize(static_cast<std::size_t>(pool.machines) * 2);
  for (long long j = 0; j < pool.machines; ++j) {
    same.at(j, 0) = pool.at(j, 0);
    same.at(j, 1) = pool.at(j, 0);
  }
  const ProtocolResult twin = run_interactive_bisection(config, same, schedule);
  CHECK(twin.estimate[0] == twin.estimate[1]);
}

TEST_CASE("direct-sum embedding: d=1 is the identity") {
  const ExperimentConfig config{1, 5, 1, 1.0};
  const FixedPointCodec codec = default_mean_codec(config);
  InnerProtocol inner;
  inner.config = config;
  inner.machines_needed = 5;
  inner.run = [config, codec](const MeanMatrix& means) {
    return run_simultaneous_mean(config, means, codec);
  };
  const RandomnessModel rnd{51};
  const MeanMatrix means = sample_machine_means({0.3}, 5, 1, 1.0, rnd);
  Rng pub = rnd.public_stream();
  const ProtocolResult direct = inner.run(means);
  Rng pub2 = rnd.public_stream();
  const ProtocolResult embedded = embed_direct_sum(
      inner, 0, means, PriorSpec::uniform_pm(0.5), pub2, rnd);
  CHECK(embedded.estimate == direct.estimate);
  CHECK(transcript_cost(embedded.transcript) == transcript_cost(direct.transcript));
  (void)pub;
}

TEST_CASE("direct-sum embedding: composed data has the right moments") {
  const ExperimentConfig config{4, 2000, 4, 1.0};
  InnerProtocol probe;
  probe.config = config;
  probe.machines_needed = 2000;
  MeanMatrix captured;
  probe.run = [&captured, config](const MeanMatrix& means) {
    captured = means;
    // Minimal valid result so the embedding completes.
    ProtocolResult r;
    Message msg;
    msg.append_bits(1, 1);
    r.transcript.push(std::move(msg));
    r.estimate.assign(static_cast<std::size_t>(config.d), 0.0);
    r.machines_used = means.machines;
    return r;
  };
  const RandomnessModel rnd{52};
  const double theta = 0.45;
  const MeanMatrix one_dim = sample_machine_means({theta}, 2000, 4, 1.0, rnd);
  Rng pub(999);
  embed_direct_sum(probe, 1, one_dim, PriorSpec::uniform_pm(0.5), pub, rnd);
  REQUIRE(captured.machines == 2000);
  REQUIRE(captured.d == 4);
  // Column `coord` carries the real data; other columns are N(theta_i, 1/4).
  for (int i = 0; i < 4; ++i) {
    double s1 = 0, s2 = 0;
    for (long long j = 0; j < 2000; ++j) {
      s1 += captured.at(j, i);
      s2 += captured.at(j, i) * captured.at(j, i);
    }
    const double mean = s1 / 2000;
    const double var = s2 / 2000 - mean * mean;
    if (i == 1) CHECK(std::fabs(mean - theta) < 4 * 0.5 / std::sqrt(2000.0));
    else
      CHECK(std::fabs(std::fabs(mean) - 0.5) < 4 * 0.5 / std::sqrt(2000.0));
    CHECK(var == doctest::Approx(0.25).epsilon(0.15));
  }
  for (long long j = 0; j < 2000; ++j) CHECK(captured.at(j, 1) == one_dim.at(j, 0));
}
