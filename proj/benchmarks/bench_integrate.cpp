#include <benchmark/benchmark.h>

#include "diffgeo/integrate.hpp"
#include "diffgeo/model.hpp"

using namespace diffgeo;

namespace {

PlanarSystem damped() { return make_pendulum({0.5, InputLaw::constant(1.5)}); }

void BM_State(benchmark::State &state) {
  const PlanarSystem sys = damped();
  const IntegratorConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(integrate_state(sys, {0.1, 0.0}, cfg, {0.0, static_cast<double>(state.range(0))}));
  }
}
BENCHMARK(BM_State)->Arg(10)->Arg(100);

void BM_Fundamental(benchmark::State &state) {
  const PlanarSystem sys = damped();
  const IntegratorConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(integrate_fundamental(sys, {0.1, 0.0}, cfg, {0.0, static_cast<double>(state.range(0))}));
  }
}
BENCHMARK(BM_Fundamental)->Arg(10)->Arg(100);

void BM_FixedStep(benchmark::State &state) {
  const PlanarSystem sys = damped();
  IntegratorConfig cfg;
  cfg.method = FixedStepRK4{0.01};
  for (auto _ : state) {
    benchmark::DoNotOptimize(integrate_state(sys, {0.1, 0.0}, cfg, {0.0, 10.0}));
  }
}
BENCHMARK(BM_FixedStep);

}  // namespace

BENCHMARK_MAIN();
