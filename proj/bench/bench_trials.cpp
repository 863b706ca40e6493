// Serial reference vs OpenMP kernels on the two hot loops.
#include <benchmark/benchmark.h>

#include "pfest/distributions.hpp"
#include "pfest/parallel.hpp"

namespace {

const pfest::DistributionPair& pair() {
  static const auto p = pfest::make_random_pair(64, 2.0, 1.0, 7);
  return p;
}

void BM_RaceFrequencies(benchmark::State& state) {
  const auto exec = state.range(0) ? pfest::Execution::Parallel : pfest::Execution::Serial;
  const auto races = static_cast<std::uint64_t>(state.range(1));
  for (auto _ : state) {
    auto rc = pfest::race_frequencies(pair(), 16, races, 1, exec);
    benchmark::DoNotOptimize(rc.counts.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(races));
  state.SetLabel(exec == pfest::Execution::Parallel ? "parallel" : "serial");
}

void BM_MomSuccesses(benchmark::State& state) {
  const auto exec = state.range(0) ? pfest::Execution::Parallel : pfest::Execution::Serial;
  const auto trials = static_cast<std::uint64_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(pfest::mom_successes(pair(), 2000, 0.1, 0.1, trials, 2, exec));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(trials));
  state.SetLabel(exec == pfest::Execution::Parallel ? "parallel" : "serial");
}

}  // namespace

BENCHMARK(BM_RaceFrequencies)->ArgsProduct({{0, 1}, {100'000, 1'000'000}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MomSuccesses)->ArgsProduct({{0, 1}, {200, 2000}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
