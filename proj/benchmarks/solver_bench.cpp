// SPDX-License-Identifier: Apache-2.0
//
// Microbenchmarks for the solver hot paths: channel construction, the FP
// phase update and the rotation gradients, at the default operating point
// and a reduced panel.

#include <benchmark/benchmark.h>

#include "dualrot/mu_solver.hpp"
#include "dualrot/rng.hpp"
#include "dualrot/su_solver.hpp"

namespace {

using namespace dualrot;

ScenarioConfig config_for(int irs_side) {
  ScenarioConfig config;
  config.irs_side_count = irs_side;
  return config;
}

struct Fixture {
  explicit Fixture(int irs_side)
      : config(config_for(irs_side)),
        geom(build_geometry(config)),
        scenario(sample_scenario(config, 1)),
        limits(RotationLimits::from_config(config)) {
    Rng rng(7);
    v = random_phase_vector(rng, geom.irs_count());
    state = MuState::create(scenario, geom, limits, config.solver,
                            RotationState::reference(geom.bs_count()), v);
  }
  ScenarioConfig config;
  ArrayGeometry geom;
  Scenario scenario;
  RotationLimits limits;
  cvec v;
  MuState state;
};

Fixture& fixture(int irs_side) {
  static Fixture small(11);
  static Fixture full(21);
  return irs_side == 11 ? small : full;
}

void BM_IrsBsChannel(benchmark::State& bench) {
  Fixture& f = fixture(static_cast<int>(bench.range(0)));
  const OrientationCache cache = orientation_cache(f.geom, {0.1, -0.1, 0.05});
  for (auto _ : bench) {
    benchmark::DoNotOptimize(irs_bs_channel(f.geom, f.scenario.bs_pattern,
                                            f.scenario.irs_pattern, f.state.boresights, cache));
  }
}
BENCHMARK(BM_IrsBsChannel)->Arg(11)->Arg(21)->Unit(benchmark::kMicrosecond);

void BM_FpPhaseUpdate(benchmark::State& bench) {
  Fixture& f = fixture(static_cast<int>(bench.range(0)));
  for (auto _ : bench) {
    benchmark::DoNotOptimize(fp_rcg_phase_update(f.state.h_direct, f.state.irs_bs,
                                                 f.state.h_irs, f.state.combiners,
                                                 f.scenario.power_w, f.scenario.noise_w,
                                                 f.state.v, f.config.solver));
  }
}
BENCHMARK(BM_FpPhaseUpdate)->Arg(11)->Arg(21)->Unit(benchmark::kMillisecond);

void BM_OrientationGradient(benchmark::State& bench) {
  Fixture& f = fixture(static_cast<int>(bench.range(0)));
  for (auto _ : bench) {
    benchmark::DoNotOptimize(sum_rate_gradient_orientation(
        f.scenario, f.geom, f.state.boresights, f.state.psi, f.state.v, f.state.combiners));
  }
}
BENCHMARK(BM_OrientationGradient)->Arg(11)->Arg(21)->Unit(benchmark::kMillisecond);

void BM_BcdSweep(benchmark::State& bench) {
  Fixture& f = fixture(static_cast<int>(bench.range(0)));
  const cmat cascade = cascade_columns(f.state.irs_bs, f.state.h_irs[0]);
  const cvec zero = cvec::Zero(f.geom.bs_count());
  cvec v = f.v;
  for (auto _ : bench) {
    v = bcd_phase_sweep(zero, cascade, v);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_BcdSweep)->Arg(11)->Arg(21)->Unit(benchmark::kMicrosecond);

} // namespace

BENCHMARK_MAIN();
