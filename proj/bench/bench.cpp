// Serial reference against the OpenMP kernels on the same inputs.

#include <benchmark/benchmark.h>

#include "lrw/contraction.hpp"
#include "lrw/estimators.hpp"
#include "lrw/experiments.hpp"
#include "lrw/martcouple.hpp"

using namespace lrw;

namespace {

const AtomicMeasure& sl2() {
  static const AtomicMeasure mu = load_measure(LRW_DATA_DIR "/measures/sl2_zariski.json");
  return mu;
}

Exec mode(const benchmark::State& s) { return s.range(0) ? Exec::parallel : Exec::serial; }

void BM_Lyapunov(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(lyapunov(sl2(), CocycleKind::iwasawa, 2000, 64, 100, 1, mode(s)));
}
BENCHMARK(BM_Lyapunov)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_CltRate(benchmark::State& s) {
  for (auto _ : s)
    benchmark::DoNotOptimize(clt_rate(sl2(), CocycleKind::norm_proj, {256, 1024, 4096}, 512, 100, 1, mode(s)));
}
BENCHMARK(BM_CltRate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_AsipRuns(benchmark::State& s) {
  const DrivenMartingale m = rademacher_martingale();
  for (auto _ : s) benchmark::DoNotOptimize(asip_runs(m, 1 << 12, 3.0, AsipMode::l1_item2, 16, 1, mode(s)));
}
BENCHMARK(BM_AsipRuns)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ContractionIndex(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(contraction_index(sl2(), 16, 32, 64, 1, mode(s)));
}
BENCHMARK(BM_ContractionIndex)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
