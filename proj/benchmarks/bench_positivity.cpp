#include <benchmark/benchmark.h>

#include "diffgeo/positivity.hpp"

using namespace diffgeo;

namespace {

void BM_ConeInvariance(benchmark::State &state) {
  const PlanarSystem sys = make_pendulum({3.0, InputLaw::constant(0.0)});
  const ConeFieldSpec cone = ConeFieldSpec::pendulum_default();
  const IntegratorConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(verify_cone_invariance(sys, cone, StateGrid{}, 1.0, cfg));
}
BENCHMARK(BM_ConeInvariance)->Unit(benchmark::kMillisecond);

void BM_PFPoint(benchmark::State &state) {
  const PlanarSystem sys = make_pendulum({3.0, InputLaw::constant(0.5)});
  const ConeFieldSpec cone = ConeFieldSpec::pendulum_default();
  const IntegratorConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(pf_vector_at(sys, cone, CylinderPoint(1.0, 0.5), cfg));
}
BENCHMARK(BM_PFPoint);

}  // namespace

BENCHMARK_MAIN();
