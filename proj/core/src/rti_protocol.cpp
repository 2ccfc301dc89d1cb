#include "nvrti/rti_protocol.hpp"

#include <cmath>
#include <limits>

#include "nvrti/errors.hpp"

namespace nvrti {

void ProtocolConfig::validate() const {
    if (!(probe_power_uw >= 0)) throw validation_error("probe power must be non-negative");
    if (!(probe_duration_s > 0)) throw validation_error("probe duration must be positive");
    if (!(pump_duration_s > 0)) throw validation_error("pump duration must be positive");
    if (!(overhead_s > 0)) throw validation_error("overhead must be positive");
    if (delay_s < 0) throw validation_error("delay must be non-negative");
    if (threshold < 1 || threshold > 63)
        throw validation_error("threshold must lie in [1, 63] (6-bit counter)");
    if (prior_p_minus < 0.0 || prior_p_minus > 1.0)
        throw validation_error("prior negative population must lie in [0,1]");
}

namespace {

struct TriggerTails {
    double tail_minus;
    double tail_zero;
};

TriggerTails trigger_tails(const RateSet& rates, double t_probe_s, std::int64_t nu) {
    const PhotonDistribution minus =
        distribution_conditional(rates, t_probe_s, ChargeState::negative);
    const PhotonDistribution zero =
        distribution_conditional(rates, t_probe_s, ChargeState::neutral);
    return {tail_probability(minus, nu), tail_probability(zero, nu)};
}

double trigger_probability(const TriggerTails& t, double prior) {
    return prior * t.tail_minus + (1.0 - prior) * t.tail_zero;
}

} // namespace

double threshold_error(const RateSet& rates, double t_probe_s, std::int64_t nu, double prior) {
    if (prior < 0.0 || prior > 1.0) throw std::domain_error("prior must lie in [0,1]");
    if (nu < 0) throw std::domain_error("threshold must be non-negative");
    const TriggerTails tails = trigger_tails(rates, t_probe_s, nu);
    const double den = trigger_probability(tails, prior);
    if (den < 1e-300)
        throw unreachable_threshold_error("trigger probability underflows at this threshold");
    return (1.0 - prior) * tails.tail_zero / den;
}

double delay_error(double gamma_ion_hz, double delay_s) {
    if (delay_s < 0.0) throw std::domain_error("delay must be non-negative");
    if (gamma_ion_hz < 0.0) throw std::domain_error("ionization rate must be non-negative");
    return -std::expm1(-delay_s * gamma_ion_hz);
}

ProtocolPrediction predict_protocol(const ProtocolConfig& cfg,
                                    const CalibrationConstants& cal) {
    cfg.validate();
    const RateSet rates = rates_at_power(cal, Power{cfg.probe_power_uw});
    const TriggerTails tails = trigger_tails(rates, cfg.probe_duration_s, cfg.threshold);
    const double q = trigger_probability(tails, cfg.prior_p_minus);
    if (q < 1e-300)
        throw unreachable_threshold_error("trigger probability underflows at this threshold");

    ProtocolPrediction pred;
    pred.epsilon_t = (1.0 - cfg.prior_p_minus) * tails.tail_zero / q;
    pred.epsilon_d = delay_error(rates.gamma_ion_hz, cfg.delay_s);
    pred.fidelity = (1.0 - pred.epsilon_t) * (1.0 - pred.epsilon_d);
    pred.avg_attempts = 1.0 / q;
    pred.init_time_s = cfg.cycle_duration_s() * pred.avg_attempts;
    return pred;
}

ProtocolPrediction initialization_fidelity(const ProtocolConfig& cfg,
                                           const CalibrationConstants& cal) {
    return predict_protocol(cfg, cal);
}

double average_attempts(const ProtocolConfig& cfg, const CalibrationConstants& cal) {
    return predict_protocol(cfg, cal).avg_attempts;
}

double initialization_time(const ProtocolConfig& cfg, double n_bar) {
    if (n_bar < 1.0) throw std::domain_error("average attempts cannot be below one");
    return cfg.cycle_duration_s() * n_bar;
}

ControllerOutcome run_controller(const ProtocolConfig& cfg, const CalibrationConstants& cal,
                                 std::uint64_t seed, const ControllerOptions& options) {
    cfg.validate();
    if (options.pump_reset_probability < 0.0 || options.pump_reset_probability > 1.0)
        throw validation_error("pump reset probability must lie in [0,1]");
    const RateSet rates = rates_at_power(cal, Power{cfg.probe_power_uw});

    SplitMix64 rng(seed);
    ControllerOutcome outcome;
    if (options.record_counters) outcome.counter_trace.emplace();

    ChargeState charge = ChargeState::negative;
    bool first_attempt = true;
    while (outcome.attempts < options.max_attempts) {
        ++outcome.attempts;

        // Pump: instantaneous re-randomization toward the prior. With a
        // partial reset the previous charge survives the pump.
        if (first_attempt || rng.bernoulli(options.pump_reset_probability))
            charge = rng.bernoulli(cfg.prior_p_minus) ? ChargeState::negative
                                                      : ChargeState::neutral;
        first_attempt = false;
        outcome.elapsed_s += cfg.pump_duration_s + cfg.overhead_s;

        const TimedTrajectory traj =
            simulate_timed_trajectory(rates, cfg.probe_duration_s, charge, rng);

        // The hardware compares the running count against nu on every edge;
        // the register wraps modulo 64 but the comparison precedes any wrap
        // for thresholds up to 63.
        std::uint64_t count = 0;
        double trigger_time = -1.0;
        for (double t : traj.photon_times_s) {
            ++count;
            if (count == static_cast<std::uint64_t>(cfg.threshold)) {
                trigger_time = t;
                break;
            }
        }

        if (trigger_time < 0.0) {
            // No trigger: full probe elapsed, charge carries to the next pump.
            outcome.elapsed_s += cfg.probe_duration_s;
            charge = traj.final_state;
            if (options.record_counters)
                outcome.counter_trace->push_back(
                    static_cast<std::uint8_t>(traj.photon_times_s.size() % 64));
            continue;
        }

        outcome.elapsed_s += trigger_time;
        if (options.record_counters)
            outcome.counter_trace->push_back(static_cast<std::uint8_t>(count % 64));

        // Halt latency: only ionization is sampled while the loop winds down.
        charge = traj.state_at(trigger_time);
        if (charge == ChargeState::negative && cfg.delay_s > 0.0 &&
            rng.exponential(rates.gamma_ion_hz) < cfg.delay_s)
            charge = ChargeState::neutral;
        outcome.elapsed_s += cfg.delay_s;
        outcome.success_state = charge;
        return outcome;
    }
    throw non_convergence_error("initialization loop exceeded the attempt budget");
}

ProtocolStats estimate_protocol_stats(const ProtocolConfig& cfg,
                                      const CalibrationConstants& cal, std::uint64_t shots,
                                      std::uint64_t seed, const ControllerOptions& options) {
    if (shots < 1) throw std::domain_error("at least one shot required");

    ProtocolStats stats;
    stats.shots = shots;
    double success = 0.0;
    double attempts_sum = 0.0;
    double attempts_sq = 0.0;
    double elapsed_sum = 0.0;
    for (std::uint64_t i = 0; i < shots; ++i) {
        const ControllerOutcome out =
            run_controller(cfg, cal, SplitMix64::substream(seed, i), options);
        success += out.success_state == ChargeState::negative ? 1.0 : 0.0;
        const double a = static_cast<double>(out.attempts);
        attempts_sum += a;
        attempts_sq += a * a;
        elapsed_sum += out.elapsed_s;
    }
    const double n = static_cast<double>(shots);
    stats.fidelity = success / n;
    stats.attempts_mean = attempts_sum / n;
    stats.elapsed_mean_s = elapsed_sum / n;
    if (shots == 1) {
        stats.degenerate = true;
        stats.fidelity_se = std::numeric_limits<double>::infinity();
        stats.attempts_se = std::numeric_limits<double>::infinity();
    } else {
        stats.fidelity_se = std::sqrt(stats.fidelity * (1.0 - stats.fidelity) / n);
        const double var = (attempts_sq - attempts_sum * attempts_sum / n) / (n - 1.0);
        stats.attempts_se = std::sqrt(std::max(var, 0.0) / n);
    }
    return stats;
}

} // namespace nvrti
