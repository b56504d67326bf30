#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "rowsim/engine.hpp"
#include "rowsim/row_bus.hpp"
#include "rowsim/scenario.hpp"
#include "rowsim/spectrum.hpp"

using namespace rowsim;

static void BM_StepBus(benchmark::State& state) {
  BusParams params;
  ShelfSpec shelf;
  DruBankState bank;
  bank.n_shelves = 11;
  bank.soc = 0.65;
  BusState bus;
  DruEngagement engage;
  double i_other = -50.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(step_bus(bus, params, bank, shelf, engage, i_other, 1e-5));
    i_other = -i_other;
  }
}
BENCHMARK(BM_StepBus);

static void BM_SimulateBurst(benchmark::State& state) {
  const auto sc = parse_scenario(R"({"name": "bench", "horizon": "2 s", "seed": 1,
    "envelope": {"p_avg": "1 MW", "alpha_max": 0.25, "t_surge": "60 s", "dt_edge": "200 ms"},
    "sst": {"p_rated": "1300 kW", "tau": "8 s", "droop": "13.5 mV/A"},
    "events": [{"type": "burst", "start": "0.5 s", "width": "1 s", "alpha": 0.25}]})");
  for (auto _ : state) benchmark::DoNotOptimize(simulate(sc));
  state.SetLabel("2 s simulated");
}
BENCHMARK(BM_SimulateBurst)->Unit(benchmark::kMillisecond);

static void BM_BandPower(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = 800.0 + std::sin(2 * std::numbers::pi * 5.0 * 1e-3 * static_cast<double>(i));
  for (auto _ : state) benchmark::DoNotOptimize(spectrum::band_power(x, 1e-3, 1.0, 30.0));
}
BENCHMARK(BM_BandPower)->Arg(1 << 14)->Arg(100000);

BENCHMARK_MAIN();
