// Throughput of the sampling kernels, serial reference (threads = 1) against
// the OpenMP path. Range argument: thread count.
#include <benchmark/benchmark.h>
#include <omp.h>

#include <cmath>

#include "exlab/ergodic.hpp"

using namespace exlab;

namespace {

void BM_MonteCarlo(benchmark::State& state) {
  MonteCarloSpec spec;
  spec.master_seed = 11;
  spec.samples = 16;
  spec.horizons = {1000.0, 2000.0};
  spec.levels = {4.0, 16.0};
  spec.threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(monte_carlo(spec));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(spec.samples));
}

void BM_Volume(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(volume_estimate(3, 4.0, 20000));
  state.SetItemsProcessed(state.iterations() * 20000);
}

void BM_TrimmedSums(benchmark::State& state) {
  const std::size_t n = 20000, seeds = 16;
  std::vector<double> out(seeds);
  for (auto _ : state) {
    for_each_sample(seeds, static_cast<int>(state.range(0)), 5, [&](std::size_t i) {
      auto cf = CFStream::from_conditional_law(sample_seed(5, i));
      out[i] = trimmed_sum(cf, n).ratio;
    });
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(seeds * n));
}

void BM_Correlation(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(correlation_decay(9, 2000, std::log(2.0), {0, 1, 5, 10}, static_cast<int>(state.range(0))));
}

void thread_args(benchmark::internal::Benchmark* b) {
  b->Arg(1);
  const int max = omp_get_max_threads();
  if (max > 1) b->Arg(max);
  b->Unit(benchmark::kMillisecond)->UseRealTime();
}

}  // namespace

BENCHMARK(BM_MonteCarlo)->Apply(thread_args);
BENCHMARK(BM_Volume)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrimmedSums)->Apply(thread_args);
BENCHMARK(BM_Correlation)->Apply(thread_args);

BENCHMARK_MAIN();
