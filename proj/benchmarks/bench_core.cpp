#include <benchmark/benchmark.h>

#include "randfront/hitting.hpp"
#include "randfront/pam.hpp"
#include "randfront/potential.hpp"

using namespace randfront;

namespace {

void BM_FieldEvaluate(benchmark::State& state) {
  PotentialField field(PotentialSpec::matern(3.0, 2.0, 0.9, 1));
  // warm the cells once so the loop measures the memoized path
  for (double x = -100.0; x < 100.0; x += 0.5) benchmark::DoNotOptimize(field.evaluate(x));
  double x = -100.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(field.evaluate(x));
    x += 0.37;
    if (x > 100.0) x = -100.0;
  }
}
BENCHMARK(BM_FieldEvaluate);

void BM_CrossingSolve(benchmark::State& state) {
  PotentialField field(PotentialSpec::matern(3.0, 2.0, 0.9, 2));
  BvpConfig cfg;
  ZetaGrid grid(field, 8, cfg);
  long i = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(grid.log_mgf_unit(i, -1.0));
    i = i % 8 + 1;
  }
}
BENCHMARK(BM_CrossingSolve);

void BM_PamStep(benchmark::State& state) {
  PotentialField field(PotentialSpec::matern(3.0, 2.0, 0.9, 3));
  GridConfig g;
  const double horizon = static_cast<double>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(
        solve_pam(field, InitialCondition::heaviside(), g, horizon));
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(horizon / g.dt));
}
BENCHMARK(BM_PamStep)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_EmpiricalTilt(benchmark::State& state) {
  PotentialField field(PotentialSpec::matern(3.0, 2.0, 0.9, 4));
  BvpConfig cfg;
  const long n = state.range(0);
  ZetaGrid grid(field, n, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(grid.empirical_tilt(n, 2.2));
}
BENCHMARK(BM_EmpiricalTilt)->Arg(25)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
