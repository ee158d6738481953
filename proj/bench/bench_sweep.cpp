#include <benchmark/benchmark.h>

#include "lordpx/simulate.hpp"

namespace {

std::vector<lordpx::ScenarioSpec> grid() {
  std::vector<lordpx::ScenarioSpec> out;
  for (double icc : {0.0, 0.15}) {
    lordpx::ScenarioSpec s;
    s.n_sch = 20;
    s.pupils_per_school = {40};
    s.icc_target = icc;
    s.delta_pre = -0.2;
    s.rho = 0.6;
    s.seed = 7;
    out.push_back(s);
  }
  return out;
}

lordpx::AnalysisOptions options() {
  lordpx::AnalysisOptions o;
  o.keep_school_effects = false;
  return o;
}

void BM_SweepSerial(benchmark::State& state) {
  const auto g = grid();
  for (auto _ : state)
    benchmark::DoNotOptimize(lordpx::sweep_serial(g, static_cast<std::size_t>(state.range(0)), options()));
  state.SetItemsProcessed(state.iterations() * state.range(0) * static_cast<long>(g.size()));
}

void BM_SweepParallel(benchmark::State& state) {
  const auto g = grid();
  for (auto _ : state)
    benchmark::DoNotOptimize(lordpx::sweep(g, static_cast<std::size_t>(state.range(0)), options()));
  state.SetItemsProcessed(state.iterations() * state.range(0) * static_cast<long>(g.size()));
}

}  // namespace

BENCHMARK(BM_SweepSerial)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SweepParallel)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
