#include <benchmark/benchmark.h>

#include "nvrti/charge_dynamics.hpp"
#include "nvrti/rti_protocol.hpp"
#include "nvrti/telegraph_mc.hpp"

using namespace nvrti;

static void EmpiricalDistributionShots(benchmark::State& state) {
    const RateSet r = rates_at_power(CalibrationConstants::defaults(), Power{100.0});
    const auto shots = static_cast<std::uint64_t>(state.range());
    for (auto _ : state) {
        auto e = empirical_distribution(r, 5e-6, InitialCondition::mixture(0.75), shots, 7);
        benchmark::DoNotOptimize(e);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(shots) * state.iterations());
}
BENCHMARK(EmpiricalDistributionShots)->Arg(1000)->Arg(10000)->Arg(100000);

static void ControllerRun(benchmark::State& state) {
    ProtocolConfig cfg;
    cfg.probe_power_uw = 53.0;
    cfg.probe_duration_s = 5e-6;
    cfg.threshold = 1;
    const CalibrationConstants cal = CalibrationConstants::defaults();
    std::uint64_t seed = 0;
    for (auto _ : state) {
        auto out = run_controller(cfg, cal, seed++);
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(ControllerRun);
