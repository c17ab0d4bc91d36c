// Serial-vs-parallel trial loop comparison, plus the literal per-machine
// bisection against the aggregated per-round kernel.

#include <benchmark/benchmark.h>

#include "destim/harness.hpp"

using namespace destim;

namespace {

void BM_averaging_trials(benchmark::State& state) {
  const int jobs = static_cast<int>(state.range(0));
  const ExperimentConfig config{4, 64, 8, 1.0};
  const ProtocolSetup setup = make_averaging(config, true);
  const PriorSpec prior = PriorSpec::uniform_interval(-0.9, 0.9);
  for (auto _ : state) {
    const RiskResult r = estimate_risk(setup, prior, 2000, 7, jobs);
    benchmark::DoNotOptimize(r.mse.mean);
  }
}
BENCHMARK(BM_averaging_trials)->Arg(1)->Arg(2)->Arg(4)->Arg(8)
    ->Unit(benchmark::kMillisecond);

void BM_bisection_trials(benchmark::State& state) {
  const int jobs = static_cast<int>(state.range(0));
  const ExperimentConfig config{1, 256, 1, 1.0};
  const ProtocolSetup setup = make_bisection(config, false);
  const PriorSpec prior = PriorSpec::uniform_interval(-1.0, 1.0);
  for (auto _ : state) {
    const RiskResult r = estimate_risk(setup, prior, 2000, 7, jobs);
    benchmark::DoNotOptimize(r.mse.mean);
  }
}
BENCHMARK(BM_bisection_trials)->Arg(1)->Arg(2)->Arg(4)->Arg(8)
    ->Unit(benchmark::kMillisecond);

void BM_bisection_kernel(benchmark::State& state) {
  // literal (0): one bit per machine; aggregated (1): one binomial per round.
  const bool aggregated = state.range(0) == 1;
  const ExperimentConfig config{1, 256, 1, 1.0};
  const ProtocolSetup setup = make_bisection(config, !aggregated);
  const PriorSpec prior = PriorSpec::uniform_interval(-1.0, 1.0);
  for (auto _ : state) {
    const RiskResult r = estimate_risk(setup, prior, 200, 9, 1);
    benchmark::DoNotOptimize(r.mse.mean);
  }
}
BENCHMARK(BM_bisection_kernel)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
