#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "nvrti/errors.hpp"
#include "version.hpp"

using namespace nvrti;
using namespace nvrti::cli;

namespace {

void add_common(CLI::App* cmd, CommonArgs& common) {
    cmd->add_option("-c,--config", common.config_path,
                    "JSON config file (default: $NVRTI_CONFIG if set)");
    cmd->add_option("-o,--output", common.output_path, "output file (default: stdout)");
    cmd->add_flag("--stamp", common.stamp,
                  "embed a wall-clock timestamp (off by default so reruns are byte-identical)");
}

void add_protocol_overrides(CLI::App* cmd, std::string& probe_power,
                            std::string& probe_duration, std::string& pump_duration,
                            std::string& overhead, std::string& delay,
                            std::int64_t& threshold, double& prior) {
    cmd->add_option("--probe-power", probe_power, "probe power, e.g. 100uW");
    cmd->add_option("--probe-duration", probe_duration, "probe duration, e.g. 5us");
    cmd->add_option("--pump-duration", pump_duration, "pump duration, e.g. 0.5us");
    cmd->add_option("--overhead", overhead, "per-attempt overhead, e.g. 1.5us");
    cmd->add_option("--delay", delay, "halt latency, e.g. 550ns");
    cmd->add_option("--threshold", threshold, "photon threshold (1..63)");
    cmd->add_option("--prior", prior, "negative-state population after a pump");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Real-time charge initialization and spin-readout modeling toolkit"};
    app.set_version_flag("--version", NVRTI_VERSION);
    app.require_subcommand(1);

    PredictArgs predict;
    CLI::App* predict_cmd =
        app.add_subcommand("predict", "closed-form protocol prediction (JSON)");
    add_common(predict_cmd, predict.common);
    add_protocol_overrides(predict_cmd, predict.probe_power, predict.probe_duration,
                           predict.pump_duration, predict.overhead, predict.delay,
                           predict.threshold, predict.prior);

    SimulateArgs simulate;
    CLI::App* simulate_cmd = app.add_subcommand(
        "simulate", "discrete-event controller ensemble (summary JSON + optional runs CSV)");
    simulate_cmd->alias("emulate");
    add_common(simulate_cmd, simulate.common);
    add_protocol_overrides(simulate_cmd, simulate.probe_power, simulate.probe_duration,
                           simulate.pump_duration, simulate.overhead, simulate.delay,
                           simulate.threshold, simulate.prior);
    simulate_cmd->add_option("--shots", simulate.shots, "number of independent runs")
        ->required();
    simulate_cmd->add_option("--seed", simulate.seed, "master seed");
    simulate_cmd->add_option("--runs-csv", simulate.runs_csv_path, "per-run records CSV path");
    simulate_cmd->add_option("--pump-reset", simulate.pump_reset_probability,
                             "probability a pump re-randomizes the charge (history mode < 1)");
    simulate_cmd->add_flag("--counters", simulate.counters, "record 6-bit counter traces");

    FitArgs fit;
    CLI::App* fit_cmd =
        app.add_subcommand("fit", "maximum-likelihood histogram fit or curve fit (JSON)");
    add_common(fit_cmd, fit.common);
    fit_cmd->add_option("--histogram", fit.histograms, "histogram CSV (repeat for joint fits)");
    fit_cmd->add_option("--t-r", fit.t_r, "readout duration per histogram, e.g. 20us");
    fit_cmd->add_option("--power", fit.power, "probe power per histogram, e.g. 100uW");
    fit_cmd->add_option("--free", fit.free_params,
                        "comma list of free parameters (default p_minus; 'all' frees rates too)");
    fit_cmd->add_option("--init", fit.init_json, "JSON initial values, rates in Hz");
    fit_cmd->add_option("--curve", fit.curve_path, "curve CSV (x,y[,sigma])");
    fit_cmd->add_option("--model", fit.model, "curve model: ramsey | hahn | t1");
    fit_cmd->add_option("--lifetime-before", fit.lifetime_before, "transient CSV before inversion");
    fit_cmd->add_option("--lifetime-after", fit.lifetime_after, "transient CSV after inversion");
    fit_cmd->add_option("--irf", fit.irf_path, "instrument response CSV (x,y)");
    fit_cmd->add_flag("--fit-f-pi", fit.fit_f_pi, "float the inversion-pulse fidelity");
    fit_cmd->add_option("--seed", fit.seed, "restart jitter seed");

    OptimizeArgs optimize;
    CLI::App* optimize_cmd =
        app.add_subcommand("optimize", "grid search maximizing readout efficiency (JSON)");
    add_common(optimize_cmd, optimize.common);
    optimize_cmd
        ->add_option("--strategy", optimize.strategy, "SSI_PL | RTI_PL | SSI_SCC | RTI_SCC")
        ->required();
    optimize_cmd->add_option("--tau-o", optimize.tau_o, "operation time, e.g. 800us")->required();
    optimize_cmd->add_option("--t2", optimize.t2, "echo coherence time; adds eta_ac to the report");

    SpeedupCurveArgs curve;
    CLI::App* curve_cmd =
        app.add_subcommand("speedup-curve", "speedup vs operation time for each strategy (CSV)");
    add_common(curve_cmd, curve.common);
    curve_cmd->add_option("--tau-o-min", curve.tau_o_min, "grid start, e.g. 10us");
    curve_cmd->add_option("--tau-o-max", curve.tau_o_max, "grid end, e.g. 1ms");
    curve_cmd->add_option("--points", curve.points, "grid size (log-spaced)");
    curve_cmd->add_option("--strategies", curve.strategies, "comma list of strategies");

    SensitivityArgs sensitivity;
    CLI::App* sens_cmd =
        app.add_subcommand("sensitivity", "ac magnetic-field sensitivity (JSON)");
    add_common(sens_cmd, sensitivity.common);
    sens_cmd->add_option("--t2", sensitivity.t2, "echo coherence time, e.g. 800us");
    sens_cmd->add_option("--tau-i", sensitivity.tau_i, "initialization time, e.g. 43us");
    sens_cmd->add_option("--tau-r", sensitivity.tau_r, "readout duration, e.g. 127us");
    sens_cmd->add_option("--sigma-r", sensitivity.sigma_r, "spin readout noise factor");
    sens_cmd->add_option("--snr", sensitivity.snr, "single-shot SNR (derives sigma-r)");

    GenFixturesArgs fixtures;
    CLI::App* fixtures_cmd =
        app.add_subcommand("gen-fixtures", "write synthetic demo datasets (CSV)");
    add_common(fixtures_cmd, fixtures.common);
    fixtures_cmd->add_option("--out-dir", fixtures.out_dir, "output directory");
    fixtures_cmd->add_option("--seed", fixtures.seed, "generator seed");

    DistributionArgs distribution;
    CLI::App* dist_cmd =
        app.add_subcommand("distribution", "photon-count distribution for one window (CSV)");
    add_common(dist_cmd, distribution.common);
    dist_cmd->add_option("--power", distribution.power, "probe power, e.g. 100uW");
    dist_cmd->add_option("--t-r", distribution.t_r, "readout duration, e.g. 5us");
    dist_cmd->add_option("--initial", distribution.initial, "negative | neutral | mixture");
    dist_cmd->add_option("--p-minus", distribution.p_minus, "mixture fraction");

    CLI11_PARSE(app, argc, argv);

    try {
        if (predict_cmd->parsed()) return command_predict(predict);
        if (simulate_cmd->parsed()) return command_simulate(simulate);
        if (fit_cmd->parsed()) return command_fit(fit);
        if (optimize_cmd->parsed()) return command_optimize(optimize);
        if (curve_cmd->parsed()) return command_speedup_curve(curve);
        if (sens_cmd->parsed()) return command_sensitivity(sensitivity);
        if (fixtures_cmd->parsed()) return command_gen_fixtures(fixtures);
        if (dist_cmd->parsed()) return command_distribution(distribution);
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const numerical_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const non_convergence_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const unreachable_threshold_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
