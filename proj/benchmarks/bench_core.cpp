#include <benchmark/benchmark.h>

#include "dcseg/casestudy.hpp"

using namespace dcseg;

namespace {

const Scenario& scenario() {
  static const Scenario sc = load_scenario(DCSEG_DATA_DIR "/scenarios/case_study.json");
  return sc;
}

void BM_PowerFlow(benchmark::State& state) {
  const auto& net = scenario().system.network;
  for (auto _ : state) benchmark::DoNotOptimize(solve_power_flow(net));
}
BENCHMARK(BM_PowerFlow);

void BM_Initialize(benchmark::State& state) {
  const auto m = build_case(scenario(), CaseKind::DcsFcPodFCOI).model;
  for (auto _ : state) benchmark::DoNotOptimize(initialize(m));
}
BENCHMARK(BM_Initialize);

void BM_LinearizeEigensolve(benchmark::State& state) {
  const auto eq = initialize(scenario().system);
  for (auto _ : state) benchmark::DoNotOptimize(analyze(eq.model, eq.x));
}
BENCHMARK(BM_LinearizeEigensolve)->Unit(benchmark::kMillisecond);

void BM_SimulateLineTrip(benchmark::State& state) {
  const auto& sc = scenario();
  const auto eq = initialize(sc.system);
  SimConfig cfg = sc.sim;
  cfg.t_stop = static_cast<double>(state.range(0));
  cfg.record = {"region."};
  for (auto _ : state) benchmark::DoNotOptimize(simulate(eq.model, eq.x, sc.line_trip, cfg));
}
BENCHMARK(BM_SimulateLineTrip)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_BuildSegmentedDesign(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(build_case(scenario(), CaseKind::DcsFcPodFCOI));
}
BENCHMARK(BM_BuildSegmentedDesign)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
