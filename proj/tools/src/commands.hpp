#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "config.hpp"

namespace nvrti::cli {

// Shared flag bundle: config path, output path, stamping.
struct CommonArgs {
    std::string config_path;
    std::string output_path;
    bool stamp = false;
};

struct PredictArgs {
    CommonArgs common;
    // protocol overrides; empty string means "use config/default"
    std::string probe_power, probe_duration, pump_duration, overhead, delay;
    std::int64_t threshold = -1;
    double prior = -1.0;
};
int command_predict(const PredictArgs& args);

struct SimulateArgs {
    CommonArgs common;
    std::string probe_power, probe_duration, pump_duration, overhead, delay;
    std::int64_t threshold = -1;
    double prior = -1.0;
    std::uint64_t shots = 0;
    std::uint64_t seed = 1;
    double pump_reset_probability = 1.0;
    bool counters = false;
    std::string runs_csv_path;  ///< per-run records; empty disables
};
int command_simulate(const SimulateArgs& args);

struct FitArgs {
    CommonArgs common;
    // charge histogram fit: parallel lists, one entry per dataset
    std::vector<std::string> histograms;
    std::vector<std::string> t_r;      ///< duration with unit suffix
    std::vector<std::string> power;    ///< power with unit suffix (context)
    std::string free_params;           ///< comma list; default "p_minus"
    std::string init_json;             ///< optional {"gamma_minus":..., "p_minus":...} in Hz
    // curve fit
    std::string curve_path;
    std::string model;                 ///< ramsey | hahn | t1
    // lifetime joint fit
    std::string lifetime_before, lifetime_after, irf_path;
    bool fit_f_pi = false;
    std::uint64_t seed = 0x9ec4b2d1;
};
int command_fit(const FitArgs& args);

struct OptimizeArgs {
    CommonArgs common;
    std::string strategy = "RTI_SCC";
    std::string tau_o = "800us";
    std::string t2;  ///< optional; enables the sensitivity output
};
int command_optimize(const OptimizeArgs& args);

struct SpeedupCurveArgs {
    CommonArgs common;
    std::string tau_o_min = "10us";
    std::string tau_o_max = "1ms";
    std::size_t points = 15;
    std::string strategies = "SSI_PL,RTI_PL,SSI_SCC,RTI_SCC";
};
int command_speedup_curve(const SpeedupCurveArgs& args);

struct SensitivityArgs {
    CommonArgs common;
    std::string t2 = "800us";
    std::string tau_i = "43us";
    std::string tau_r = "127us";
    double sigma_r = -1.0;  ///< direct value, or derived from --snr
    double snr = -1.0;
};
int command_sensitivity(const SensitivityArgs& args);

struct GenFixturesArgs {
    CommonArgs common;
    std::string out_dir = "fixtures";
    std::uint64_t seed = 20240917;
};
int command_gen_fixtures(const GenFixturesArgs& args);

struct DistributionArgs {
    CommonArgs common;
    std::string power = "100uW";
    std::string t_r = "5us";
    std::string initial = "negative";  ///< negative | neutral | mixture
    double p_minus = 0.75;             ///< mixture fraction when initial = mixture
};
int command_distribution(const DistributionArgs& args);

} // namespace nvrti::cli
