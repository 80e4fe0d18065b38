#include "chplsim/el.hpp"
#include "chplsim/mc.hpp"
#include "chplsim/simulate.hpp"

#include <benchmark/benchmark.h>

using namespace chplsim;

namespace {

void BM_Simulate(benchmark::State& state) {
  const SimDesign d = SimDesign::design51(state.range(0), 7);
  for (auto _ : state) benchmark::DoNotOptimize(simulate(d));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Simulate)->Arg(2000)->Arg(100000);

void BM_EstimateEta(benchmark::State& state) {
  const SimOutput sim = simulate(SimDesign::design51(state.range(0), 7));
  const ModelSpec spec = test_model_spec(TestName::Lag1);
  const Theta th = test_theta0(TestName::Lag1);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        estimate_eta(sim.series, th, spec, KernelConfig::scaled_rate(), true));
}
BENCHMARK(BM_EstimateEta)->Arg(500)->Arg(2000)->Arg(8000)
    ->Unit(benchmark::kMillisecond);

void BM_SolveLambda(benchmark::State& state) {
  Rng rng(11);
  MomentMatrix psi;
  psi.psi.resize(state.range(0), 4);
  for (Eigen::Index i = 0; i < psi.psi.rows(); ++i)
    for (int c = 0; c < 4; ++c) psi.psi(i, c) = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(solve_lambda(psi));
}
BENCHMARK(BM_SolveLambda)->Arg(500)->Arg(2000);

void BM_WilksTest(benchmark::State& state) {
  const SimOutput sim = simulate(SimDesign::design51(state.range(0), 7));
  const ModelSpec spec = test_model_spec(TestName::Lag1CH1);
  const Theta th = test_theta0(TestName::Lag1CH1);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        wilks_test(sim.series, th, spec, KernelConfig::scaled_rate()));
}
BENCHMARK(BM_WilksTest)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
