#include "daud/metrics.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

namespace {

void BM_ComputeMetrics(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  size_t n = static_cast<size_t>(state.range(0));
  std::vector<double> scores(n);
  std::vector<int> labels(n);
  for (size_t i = 0; i < n; ++i) {
    scores[i] = unif(rng);
    labels[i] = (unif(rng) < 0.5) ? 1 : 0;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(daud::compute_metrics(labels, scores));
  }
}
BENCHMARK(BM_ComputeMetrics)->Arg(100)->Arg(1000)->Arg(10000);

}  // namespace
