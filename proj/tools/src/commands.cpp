#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nvrti/errors.hpp"
#include "nvrti/histogram_fit.hpp"
#include "nvrti/optimizer.hpp"
#include "nvrti/rti_protocol.hpp"
#include "nvrti/telegraph_mc.hpp"
#include "nvrti/units.hpp"

namespace nvrti::cli {

namespace {

void apply_protocol_overrides(ProtocolConfig& cfg, const std::string& probe_power,
                              const std::string& probe_duration,
                              const std::string& pump_duration, const std::string& overhead,
                              const std::string& delay, std::int64_t threshold, double prior) {
    if (!probe_power.empty()) cfg.probe_power_uw = parse_power(probe_power);
    if (!probe_duration.empty()) cfg.probe_duration_s = parse_duration(probe_duration);
    if (!pump_duration.empty()) cfg.pump_duration_s = parse_duration(pump_duration);
    if (!overhead.empty()) cfg.overhead_s = parse_duration(overhead);
    if (!delay.empty()) cfg.delay_s = parse_duration(delay);
    if (threshold >= 0) cfg.threshold = threshold;
    if (prior >= 0.0) cfg.prior_p_minus = prior;
}

nlohmann::json protocol_to_json(const ProtocolConfig& c) {
    return nlohmann::json{{"probe_power_uw", c.probe_power_uw},
                          {"probe_duration_s", c.probe_duration_s},
                          {"threshold", c.threshold},
                          {"pump_duration_s", c.pump_duration_s},
                          {"pump_power_uw", c.pump_power_uw},
                          {"overhead_s", c.overhead_s},
                          {"delay_s", c.delay_s},
                          {"prior_p_minus", c.prior_p_minus}};
}

std::string dump(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

} // namespace

int command_predict(const PredictArgs& args) {
    ToolConfig cfg = load_tool_config(args.common.config_path);
    apply_protocol_overrides(cfg.protocol, args.probe_power, args.probe_duration,
                             args.pump_duration, args.overhead, args.delay, args.threshold,
                             args.prior);
    const ProtocolPrediction pred = predict_protocol(cfg.protocol, cfg.cal);

    nlohmann::json doc;
    doc["manifest"] = make_manifest("predict", cfg, 0, args.common.stamp).to_json();
    doc["protocol"] = protocol_to_json(cfg.protocol);
    doc["prediction"] = {{"epsilon_t", pred.epsilon_t},
                         {"epsilon_d", pred.epsilon_d},
                         {"fidelity", pred.fidelity},
                         {"avg_attempts", pred.avg_attempts},
                         {"init_time_s", pred.init_time_s}};
    emit(args.common.output_path, dump(doc));
    return 0;
}

int command_simulate(const SimulateArgs& args) {
    if (args.shots == 0) throw validation_error("--shots must be at least 1");
    ToolConfig cfg = load_tool_config(args.common.config_path);
    apply_protocol_overrides(cfg.protocol, args.probe_power, args.probe_duration,
                             args.pump_duration, args.overhead, args.delay, args.threshold,
                             args.prior);
    cfg.protocol.validate();

    ControllerOptions opts;
    opts.pump_reset_probability = args.pump_reset_probability;
    opts.record_counters = args.counters;

    const RunManifest manifest = make_manifest("simulate", cfg, args.seed, args.common.stamp);

    std::ostringstream csv;
    csv << manifest.csv_header();
    csv << "run,seed,attempts,elapsed_s,success_state\n";
    double success = 0.0, attempts_sum = 0.0, attempts_sq = 0.0, elapsed_sum = 0.0;
    char row[160];
    for (std::uint64_t i = 0; i < args.shots; ++i) {
        const std::uint64_t sub = SplitMix64::substream(args.seed, i);
        const ControllerOutcome out = run_controller(cfg.protocol, cfg.cal, sub, opts);
        std::snprintf(row, sizeof(row), "%llu,%llu,%llu,%.17g,%s\n",
                      static_cast<unsigned long long>(i), static_cast<unsigned long long>(sub),
                      static_cast<unsigned long long>(out.attempts), out.elapsed_s,
                      to_string(out.success_state));
        csv << row;
        success += out.success_state == ChargeState::negative ? 1.0 : 0.0;
        const double a = static_cast<double>(out.attempts);
        attempts_sum += a;
        attempts_sq += a * a;
        elapsed_sum += out.elapsed_s;
    }
    if (!args.runs_csv_path.empty()) emit(args.runs_csv_path, csv.str());

    const double n = static_cast<double>(args.shots);
    const double fidelity = success / n;
    const double attempts_mean = attempts_sum / n;
    const double attempts_var =
        args.shots > 1 ? (attempts_sq - attempts_sum * attempts_sum / n) / (n - 1.0) : 0.0;

    nlohmann::json doc;
    doc["manifest"] = manifest.to_json();
    doc["protocol"] = protocol_to_json(cfg.protocol);
    doc["summary"] = {
        {"shots", args.shots},
        {"fidelity", fidelity},
        {"fidelity_se", args.shots > 1 ? std::sqrt(fidelity * (1.0 - fidelity) / n) : -1.0},
        {"attempts_mean", attempts_mean},
        {"attempts_se", args.shots > 1 ? std::sqrt(std::max(attempts_var, 0.0) / n) : -1.0},
        {"elapsed_mean_s", elapsed_sum / n}};
    emit(args.common.output_path, dump(doc));
    return 0;
}

namespace {

ChargeFreeMask parse_free_mask(const std::string& list) {
    if (list.empty()) return ChargeFreeMask::population_only();
    ChargeFreeMask mask;  // everything fixed until named
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "gamma_minus") mask.gamma_minus = true;
        else if (item == "gamma_zero") mask.gamma_zero = true;
        else if (item == "gamma_ion") mask.gamma_ion = true;
        else if (item == "gamma_rec") mask.gamma_rec = true;
        else if (item == "p_minus") mask.p_minus = true;
        else if (item == "all") mask = ChargeFreeMask::all_free();
        else
            throw validation_error("unknown free parameter '" + item + "'");
    }
    return mask;
}

nlohmann::json fit_result_to_json(const FitResult& fit) {
    nlohmann::json out;
    out["parameters"] = fit.parameters;
    out["standard_errors"] = fit.standard_errors;
    out["objective"] = fit.objective;
    out["converged"] = fit.converged;
    out["iterations"] = fit.iterations;
    if (!fit.diagnostics.empty()) out["diagnostics"] = fit.diagnostics;
    return out;
}

int emit_fit(const FitArgs& args, const ToolConfig& cfg, const FitResult& fit,
             nlohmann::json provenance) {
    nlohmann::json doc;
    doc["manifest"] = make_manifest("fit", cfg, args.seed, args.common.stamp).to_json();
    doc["inputs"] = std::move(provenance);
    doc["result"] = fit_result_to_json(fit);
    emit(args.common.output_path, dump(doc));
    return fit.converged ? 0 : 3;
}

int fit_charge_command(const FitArgs& args, const ToolConfig& cfg) {
    if (args.histograms.size() != args.t_r.size() ||
        (!args.power.empty() && args.power.size() != args.histograms.size()))
        throw validation_error("--histogram, --t-r (and --power) must repeat together");

    std::vector<HistogramDataset> datasets;
    nlohmann::json provenance = nlohmann::json::array();
    for (std::size_t i = 0; i < args.histograms.size(); ++i) {
        const std::string text = read_file(args.histograms[i]);
        std::istringstream stream(text);
        const double t_r = parse_duration(args.t_r[i]);
        const double power = args.power.empty() ? 0.0 : parse_power(args.power[i]);
        datasets.push_back(
            read_histogram_dataset_csv(stream, power, t_r, args.histograms[i]));
        provenance.push_back({{"path", args.histograms[i]},
                              {"hash", fnv1a(text)},
                              {"t_r_s", t_r},
                              {"power_uw", power}});
    }

    ChargeParams init;
    init.rates = rates_at_power(cfg.cal, Power{datasets[0].power_uw});
    init.p_minus = cfg.protocol.prior_p_minus;
    if (!args.init_json.empty()) {
        const nlohmann::json j = nlohmann::json::parse(args.init_json);
        if (j.contains("gamma_minus")) init.rates.gamma_minus_hz = j.at("gamma_minus");
        if (j.contains("gamma_zero")) init.rates.gamma_zero_hz = j.at("gamma_zero");
        if (j.contains("gamma_ion")) init.rates.gamma_ion_hz = j.at("gamma_ion");
        if (j.contains("gamma_rec")) init.rates.gamma_rec_hz = j.at("gamma_rec");
        if (j.contains("p_minus")) init.p_minus = j.at("p_minus");
    }

    FitResult fit;
    if (datasets.size() == 1) {
        ChargeFitOptions opt;
        opt.free = parse_free_mask(args.free_params);
        opt.init = init;
        opt.seed = args.seed;
        fit = fit_charge_histogram(datasets[0], opt);
    } else {
        JointChargeFitOptions opt;
        opt.shared_free = parse_free_mask(args.free_params);
        opt.p_minus_free = opt.shared_free.p_minus;
        opt.init = init;
        opt.seed = args.seed;
        fit = joint_fit_histograms(datasets, opt);
    }
    return emit_fit(args, cfg, fit, std::move(provenance));
}

int fit_curve_command(const FitArgs& args, const ToolConfig& cfg) {
    const std::string text = read_file(args.curve_path);
    std::istringstream stream(text);
    const CurveData data = read_curve_csv(stream);

    CoherenceModel init;
    if (args.model == "ramsey") {
        init.kind = CoherenceModel::Kind::ramsey;
        init.timescale_s = 2e-6;
        init.detuning_hz = 5e6;
        init.hyperfine_hz = 2.16e6;
    } else if (args.model == "hahn") {
        init.kind = CoherenceModel::Kind::hahn;
        init.timescale_s = 800e-6;
        init.stretch = 2.0;
    } else if (args.model == "t1") {
        init.kind = CoherenceModel::Kind::t1;
        init.timescale_s = 5e-3;
    } else {
        throw validation_error("unknown curve model '" + args.model +
                               "' (choices: ramsey, hahn, t1)");
    }
    if (!args.init_json.empty()) {
        const nlohmann::json j = nlohmann::json::parse(args.init_json);
        if (j.contains("offset")) init.offset = j.at("offset");
        if (j.contains("amplitude")) init.amplitude = j.at("amplitude");
        if (j.contains("timescale")) init.timescale_s = j.at("timescale");
        if (j.contains("detuning")) init.detuning_hz = j.at("detuning");
        if (j.contains("hyperfine")) init.hyperfine_hz = j.at("hyperfine");
        if (j.contains("phase")) init.phase_rad = j.at("phase");
        if (j.contains("stretch")) init.stretch = j.at("stretch");
    }

    CurveFitOptions opt;
    opt.seed = args.seed;
    const FitResult fit = fit_coherence_curve(init, data, opt);
    return emit_fit(args, cfg, fit,
                    nlohmann::json::array({{{"path", args.curve_path}, {"hash", fnv1a(text)}}}));
}

int fit_lifetime_command(const FitArgs& args, const ToolConfig& cfg) {
    const std::string before_text = read_file(args.lifetime_before);
    const std::string after_text = read_file(args.lifetime_after);
    std::istringstream bs(before_text), as(after_text);
    const CurveData before = read_curve_csv(bs);
    const CurveData after = read_curve_csv(as);
    if (before.x != after.x)
        throw validation_error("before/after transients must share the time grid");

    LifetimeJointData data;
    data.t_s = before.x;
    data.y_before = before.y;
    data.y_after = after.y;
    data.sigma_before = before.sigma;
    data.sigma_after = after.sigma;
    nlohmann::json provenance = nlohmann::json::array(
        {{{"path", args.lifetime_before}, {"hash", fnv1a(before_text)}},
         {{"path", args.lifetime_after}, {"hash", fnv1a(after_text)}}});
    if (!args.irf_path.empty()) {
        const std::string irf_text = read_file(args.irf_path);
        std::istringstream is(irf_text);
        const CurveData irf = read_curve_csv(is);
        data.irf = irf.y;
        provenance.push_back({{"path", args.irf_path}, {"hash", fnv1a(irf_text)}});
    }

    LifetimeModel init;
    init.p0 = 0.9;
    init.f_pi = 0.88;
    init.gamma0_hz = 1.0 / 12.5e-9;
    init.gamma1_hz = 1.0 / 7.5e-9;
    init.amplitude_before = before.y.empty() ? 1.0 : before.y.front();
    init.amplitude_after = after.y.empty() ? 1.0 : after.y.front();
    init.background = 0.0;

    LifetimeFitOptions opt;
    opt.fit_f_pi = args.fit_f_pi;
    opt.seed = args.seed;
    const FitResult fit = fit_lifetime_joint(init, data, opt);
    return emit_fit(args, cfg, fit, std::move(provenance));
}

} // namespace

int command_fit(const FitArgs& args) {
    const ToolConfig cfg = load_tool_config(args.common.config_path);
    const bool charge = !args.histograms.empty();
    const bool curve = !args.curve_path.empty();
    const bool lifetime = !args.lifetime_before.empty() || !args.lifetime_after.empty();
    if (charge + curve + lifetime != 1)
        throw validation_error(
            "choose exactly one fit input: --histogram, --curve, or --lifetime-before/after");
    if (charge) return fit_charge_command(args, cfg);
    if (curve) return fit_curve_command(args, cfg);
    if (args.lifetime_before.empty() || args.lifetime_after.empty())
        throw validation_error("lifetime fits need both --lifetime-before and --lifetime-after");
    return fit_lifetime_command(args, cfg);
}

namespace {

OptimizeSettings settings_from(const ToolConfig& cfg) {
    OptimizeSettings s;
    s.cal = cfg.cal;
    s.spins = cfg.spins;
    s.protocol_template = cfg.protocol;
    return s;
}

nlohmann::json report_to_json(const EfficiencyReport& r) {
    nlohmann::json out{{"strategy", to_string(r.strategy)},
                       {"snr", r.snr},
                       {"tau_i_s", r.tau_i_s},
                       {"tau_o_s", r.tau_o_s},
                       {"tau_r_s", r.tau_r_s},
                       {"xi_sqrt_hz", r.xi_sqrt_hz},
                       {"speedup_vs_baseline", r.speedup_vs_baseline},
                       {"sigma_r", r.sigma_r},
                       {"fidelity", r.fidelity},
                       {"protocol", protocol_to_json(r.protocol)}};
    if (r.readout_power_uw > 0.0) {
        out["readout_power_uw"] = r.readout_power_uw;
        out["readout_threshold"] = r.readout_threshold;
    }
    if (r.eta_ac_t_per_sqrt_hz) out["eta_ac_t_per_sqrt_hz"] = *r.eta_ac_t_per_sqrt_hz;
    return out;
}

} // namespace

int command_optimize(const OptimizeArgs& args) {
    const ToolConfig cfg = load_tool_config(args.common.config_path);
    const Strategy strategy = strategy_from_string(args.strategy);
    const double tau_o = parse_duration(args.tau_o);

    EfficiencyReport report = optimize_protocol(strategy, tau_o, settings_from(cfg));
    if (!args.t2.empty()) {
        const double t2 = parse_duration(args.t2);
        report.eta_ac_t_per_sqrt_hz =
            ac_sensitivity(t2, report.tau_i_s, report.tau_r_s, report.sigma_r, cfg.physical);
    }

    nlohmann::json doc;
    doc["manifest"] = make_manifest("optimize", cfg, 0, args.common.stamp).to_json();
    doc["report"] = report_to_json(report);
    emit(args.common.output_path, dump(doc));
    return 0;
}

int command_speedup_curve(const SpeedupCurveArgs& args) {
    const ToolConfig cfg = load_tool_config(args.common.config_path);
    const double lo = parse_duration(args.tau_o_min);
    const double hi = parse_duration(args.tau_o_max);
    if (!(lo > 0.0) || !(hi > lo)) throw validation_error("bad operation-time range");
    if (args.points < 2) throw validation_error("need at least two grid points");

    std::vector<Strategy> strategies;
    {
        std::stringstream ss(args.strategies);
        std::string item;
        while (std::getline(ss, item, ',')) strategies.push_back(strategy_from_string(item));
    }
    if (strategies.empty()) throw validation_error("no strategies requested");

    std::vector<double> grid(args.points);
    const double step = std::log(hi / lo) / static_cast<double>(args.points - 1);
    for (std::size_t i = 0; i < args.points; ++i)
        grid[i] = lo * std::exp(step * static_cast<double>(i));
    grid.back() = hi;

    const std::vector<SpeedupPoint> points =
        speedup_curve(grid, strategies, settings_from(cfg));

    std::ostringstream csv;
    csv << make_manifest("speedup-curve", cfg, 0, args.common.stamp).csv_header();
    csv << "tau_o_s,strategy,speedup\n";
    char row[96];
    for (const SpeedupPoint& p : points) {
        std::snprintf(row, sizeof(row), "%.17g,%s,%.17g\n", p.tau_o_s, to_string(p.strategy),
                      p.speedup);
        csv << row;
    }
    emit(args.common.output_path, csv.str());
    return 0;
}

int command_sensitivity(const SensitivityArgs& args) {
    const ToolConfig cfg = load_tool_config(args.common.config_path);
    double sigma_r = args.sigma_r;
    if (sigma_r < 0.0 && args.snr > 0.0) sigma_r = spin_readout_noise(args.snr);
    if (sigma_r < 0.0) throw validation_error("provide --sigma-r or --snr");

    const double t2 = parse_duration(args.t2);
    const double tau_i = parse_duration(args.tau_i);
    const double tau_r = parse_duration(args.tau_r);
    const double eta = ac_sensitivity(t2, tau_i, tau_r, sigma_r, cfg.physical);

    nlohmann::json doc;
    doc["manifest"] = make_manifest("sensitivity", cfg, 0, args.common.stamp).to_json();
    doc["inputs"] = {{"t2_s", t2},
                     {"tau_i_s", tau_i},
                     {"tau_r_s", tau_r},
                     {"sigma_r", sigma_r},
                     {"g_factor", cfg.physical.g_factor}};
    doc["eta_ac_t_per_sqrt_hz"] = eta;
    doc["eta_ac_nt_per_sqrt_hz"] = eta * 1e9;
    emit(args.common.output_path, dump(doc));
    return 0;
}

int command_distribution(const DistributionArgs& args) {
    const ToolConfig cfg = load_tool_config(args.common.config_path);
    const RateSet rates = rates_at_power(cfg.cal, Power{parse_power(args.power)});
    const double t_r = parse_duration(args.t_r);

    PhotonDistribution dist;
    if (args.initial == "negative")
        dist = distribution_conditional(rates, t_r, ChargeState::negative);
    else if (args.initial == "neutral")
        dist = distribution_conditional(rates, t_r, ChargeState::neutral);
    else if (args.initial == "mixture")
        dist = distribution_mixture(rates, t_r, args.p_minus);
    else
        throw validation_error("unknown initial state '" + args.initial +
                               "' (choices: negative, neutral, mixture)");

    std::ostringstream out;
    out << make_manifest("distribution", cfg, 0, args.common.stamp).csv_header();
    out << "# initial: " << dist.initial << "\n";
    write_distribution_csv(dist, out);
    emit(args.common.output_path, out.str());
    return 0;
}

int command_gen_fixtures(const GenFixturesArgs& args) {
    const ToolConfig cfg = load_tool_config(args.common.config_path);
    namespace fs = std::filesystem;
    fs::create_directories(args.out_dir);

    const RunManifest manifest =
        make_manifest("gen-fixtures", cfg, args.seed, args.common.stamp);

    // Reference and high-purity charge histograms sharing one rate set.
    const RateSet rates = rates_at_power(cfg.cal, Power{100.0});
    const double t_r = 20e-6;
    const struct {
        const char* name;
        double p_minus;
    } sets[] = {{"charge_reference.csv", 0.733}, {"charge_highfid.csv", 0.994}};
    for (const auto& set : sets) {
        const EmpiricalDistribution e = empirical_distribution(
            rates, t_r, InitialCondition::mixture(set.p_minus), 50000,
            SplitMix64::substream(args.seed, fnv1a(set.name)));
        std::ostringstream out;
        out << manifest.csv_header();
        out << "# t_r: 20us\n# power: 100uW\n";
        write_histogram_csv(e, out);
        emit((fs::path(args.out_dir) / set.name).string(), out.str());
    }

    // A noisy echo-decay curve for the curve-fit path.
    {
        CoherenceModel m;
        m.kind = CoherenceModel::Kind::hahn;
        m.offset = 0.1;
        m.amplitude = 0.8;
        m.timescale_s = 852e-6;
        m.stretch = 2.85;
        SplitMix64 rng(SplitMix64::substream(args.seed, 1001));
        std::ostringstream out;
        out << manifest.csv_header() << "x,y,sigma\n";
        char row[96];
        for (int i = 0; i < 40; ++i) {
            const double tau = 20e-6 + i * 40e-6;
            const double sigma = 0.01;
            double noise = 0.0;
            for (int k = 0; k < 12; ++k) noise += rng.uniform() - 0.5;  // ~N(0,1)
            const double y = coherence_model_eval(m, tau) + sigma * noise;
            std::snprintf(row, sizeof(row), "%.17g,%.17g,%.17g\n", tau, y, sigma);
            out << row;
        }
        emit((fs::path(args.out_dir) / "hahn_echo.csv").string(), out.str());
    }

    nlohmann::json doc;
    doc["manifest"] = manifest.to_json();
    doc["files"] = {"charge_reference.csv", "charge_highfid.csv", "hahn_echo.csv"};
    doc["out_dir"] = args.out_dir;
    emit(args.common.output_path, dump(doc));
    return 0;
}

} // namespace nvrti::cli
