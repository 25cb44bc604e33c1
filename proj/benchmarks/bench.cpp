#include <benchmark/benchmark.h>

#include "sslab/rk_sums.hpp"
#include "sslab/singular_series.hpp"

namespace {

const sslab::GenericProductCache& cache() {
  static sslab::GenericProductCache c(1000000, 8);
  return c;
}

void SingularSeriesTriple(benchmark::State& state) {
  const auto& c = cache();
  int64_t a = 2, b = 6;
  for (auto _ : state) {
    auto v = sslab::singular_series(sslab::OffsetTuple({0, a, b}), c);
    benchmark::DoNotOptimize(v.value);
    a = (a + 2) % 1000 + 2;
    b = a + (b + 4) % 800 + 2;
  }
}
BENCHMARK(SingularSeriesTriple);

void R3SeriesFast(benchmark::State& state) {
  const auto& c = cache();
  for (auto _ : state) {
    auto series = sslab::r3_series_fast(static_cast<uint64_t>(state.range(0)), c, 1);
    benchmark::DoNotOptimize(series.values.back());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(R3SeriesFast)->Range(256, 4096)->Complexity();

void R2Series(benchmark::State& state) {
  const auto& c = cache();
  for (auto _ : state) {
    auto series = sslab::r2_exact_series(static_cast<uint64_t>(state.range(0)), c, 1);
    benchmark::DoNotOptimize(series.values.back());
  }
}
BENCHMARK(R2Series)->Range(1024, 65536);

}  // namespace

BENCHMARK_MAIN();
