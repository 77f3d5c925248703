#include "bbcopas/io.hpp"
#include "bbcopas/kernels.hpp"

#include <benchmark/benchmark.h>

using namespace bbcopas;

namespace {

const ModelParams kParams{0.9, 2.2, 0.15, 0.6, 1.2};

const std::vector<Study2x2>& studies() {
  static const auto data = read_studies_file(BBCOPAS_DATA_DIR "/cd64.csv").studies;
  return data;
}

LikelihoodConfig fixed_rule() { return LikelihoodConfig::make(Link::logistic, 21, QuadratureMode::fixed); }

void BM_cell_mixture(benchmark::State& state) {
  const auto cfg = fixed_rule();
  for (auto _ : state) benchmark::DoNotOptimize(kernels::cell_mixture(kParams, 20, 250, cfg));
}

void BM_cell_mixture_serial(benchmark::State& state) {
  const auto cfg = fixed_rule();
  for (auto _ : state) benchmark::DoNotOptimize(kernels::cell_mixture_serial(kParams, 20, 250, cfg));
}

void BM_log_marginals(benchmark::State& state) {
  const LikelihoodConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(kernels::log_marginals(kParams, studies(), cfg));
}

void BM_log_marginals_serial(benchmark::State& state) {
  const LikelihoodConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(kernels::log_marginals_serial(kParams, studies(), cfg));
}

} // namespace

BENCHMARK(BM_cell_mixture)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_cell_mixture_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_log_marginals)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_log_marginals_serial)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
