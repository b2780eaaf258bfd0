#include <benchmark/benchmark.h>

#include "diffgeo/atlas.hpp"
#include "diffgeo/orbits.hpp"

using namespace diffgeo;

namespace {

void BM_LimitCycle(benchmark::State &state) {
  const PendulumParams p{0.5, InputLaw::constant(1.5)};
  const PlanarSystem sys = make_pendulum(p);
  const IntegratorConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(find_limit_cycle(sys, p, cfg));
}
BENCHMARK(BM_LimitCycle);

void BM_HomoclinicGap(benchmark::State &state) {
  const PendulumParams p{0.1, InputLaw::constant(0.13)};
  const IntegratorConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(homoclinic_gap(p, cfg));
}
BENCHMARK(BM_HomoclinicGap);

void BM_ClassifyCell(benchmark::State &state) {
  const IntegratorConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(classify_cell(0.2, 0.95, cfg));
}
BENCHMARK(BM_ClassifyCell);

void BM_Sweep(benchmark::State &state) {
  AtlasGrid grid;
  grid.n_k = 8;
  grid.n_u = 8;
  const IntegratorConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(sweep(grid, cfg, {}, static_cast<unsigned>(state.range(0))));
}
BENCHMARK(BM_Sweep)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
