#include <benchmark/benchmark.h>

#include "nvrti/charge_dynamics.hpp"
#include "nvrti/photon_model.hpp"

using namespace nvrti;

static void ConditionalDistributionShortProbe(benchmark::State& state) {
    const RateSet r = rates_at_power(CalibrationConstants::defaults(), Power{100.0});
    for (auto _ : state) {
        auto d = distribution_conditional(r, 5e-6, ChargeState::negative);
        benchmark::DoNotOptimize(d);
    }
}
BENCHMARK(ConditionalDistributionShortProbe);

static void ConditionalDistributionLongReadout(benchmark::State& state) {
    const RateSet r = rates_at_power(CalibrationConstants::defaults(), Power{22.0});
    for (auto _ : state) {
        auto d = distribution_conditional(r, 127e-6, ChargeState::negative);
        benchmark::DoNotOptimize(d);
    }
}
BENCHMARK(ConditionalDistributionLongReadout);

static void BesselSeries(benchmark::State& state) {
    double x = 0.0;
    for (auto _ : state) {
        x += 1e-3;
        benchmark::DoNotOptimize(bessel_i(0, x));
        benchmark::DoNotOptimize(bessel_i(1, x));
    }
}
BENCHMARK(BesselSeries);
