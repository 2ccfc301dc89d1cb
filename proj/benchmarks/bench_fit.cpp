#include <benchmark/benchmark.h>

#include "nvrti/charge_dynamics.hpp"
#include "nvrti/histogram_fit.hpp"
#include "nvrti/telegraph_mc.hpp"

using namespace nvrti;

static void ChargeHistogramPopulationFit(benchmark::State& state) {
    const RateSet r = rates_at_power(CalibrationConstants::defaults(), Power{100.0});
    const EmpiricalDistribution e =
        empirical_distribution(r, 20e-6, InitialCondition::mixture(0.75), 20000, 11);
    const HistogramDataset data = HistogramDataset::from_empirical(e, 100.0, 20e-6, "bench");
    for (auto _ : state) {
        ChargeFitOptions opt;
        opt.free = ChargeFreeMask::population_only();
        opt.init.rates = r;
        opt.init.p_minus = 0.6;
        auto fit = fit_charge_histogram(data, opt);
        benchmark::DoNotOptimize(fit);
    }
}
BENCHMARK(ChargeHistogramPopulationFit);
