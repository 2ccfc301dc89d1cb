#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "nvrti/charge_dynamics.hpp"
#include "nvrti/photon_model.hpp"
#include "nvrti/telegraph_mc.hpp"

namespace nvrti {

/// Control parameters of the real-time initialization loop.
struct ProtocolConfig {
    double probe_power_uw = 100.0;
    double probe_duration_s = 5e-6;
    std::int64_t threshold = 1;        ///< photon count nu that ends the loop
    double pump_duration_s = 0.5e-6;
    double pump_power_uw = 500.0;      ///< informational; the pump is not modeled optically
    double overhead_s = 1.5e-6;        ///< AOM delay + singlet decay + control latency
    double delay_s = 550e-9;           ///< detection-to-halt latency
    double prior_p_minus = 0.75;       ///< negative population right after a pump

    /// Throws validation_error on out-of-range parameters. The threshold must
    /// fit the 6-bit hardware counter with headroom for the per-edge
    /// comparison, i.e. 1 <= nu <= 63.
    void validate() const;

    double cycle_duration_s() const {
        return pump_duration_s + overhead_s + probe_duration_s;
    }
};

/// Closed-form predictions for one protocol configuration.
struct ProtocolPrediction {
    double epsilon_t = 0.0;    ///< threshold error: false trigger from the neutral state
    double epsilon_d = 0.0;    ///< delay error: ionization during the halt latency
    double fidelity = 0.0;     ///< (1 - eps_T)(1 - eps_D)
    double avg_attempts = 0.0; ///< mean pump/probe cycles until trigger
    double init_time_s = 0.0;  ///< cycle duration x avg_attempts (full-probe upper bound)
};

/// eps_T = sum_{n>=nu} (1-P)p(n|0) / sum_{n>=nu} [P p(n|-) + (1-P)p(n|0)].
/// Throws unreachable_threshold_error when the trigger probability underflows.
double threshold_error(const RateSet& rates, double t_probe_s, std::int64_t nu, double prior);

/// eps_D = 1 - exp(-delay * gamma_ion).
double delay_error(double gamma_ion_hz, double delay_s);

/// Fidelity prediction F = (1 - eps_T)(1 - eps_D) at the configured probe power.
ProtocolPrediction initialization_fidelity(const ProtocolConfig& cfg,
                                           const CalibrationConstants& cal);

/// Mean attempts: inverse of the per-attempt trigger probability under the
/// configured prior.
double average_attempts(const ProtocolConfig& cfg, const CalibrationConstants& cal);

/// tau_I = (pump + overhead + probe) * n_bar. The controller terminates probes
/// early on trigger, so this is an upper bound on the realized mean.
double initialization_time(const ProtocolConfig& cfg, double n_bar);

/// Full closed-form prediction (single distribution evaluation).
ProtocolPrediction predict_protocol(const ProtocolConfig& cfg,
                                    const CalibrationConstants& cal);

struct ControllerOptions {
    std::uint64_t max_attempts = 1000000;
    /// Probability that a pump fully re-randomizes the charge to the prior.
    /// Below 1 the charge carries over between attempts, exposing the
    /// history dependence the fixed-prior model ignores.
    double pump_reset_probability = 1.0;
    bool record_counters = false;
};

/// Result of one emulated initialization loop.
struct ControllerOutcome {
    std::uint64_t attempts = 0;
    double elapsed_s = 0.0;            ///< wall time including the final delay
    ChargeState success_state = ChargeState::negative;  ///< charge after the delay
    std::optional<std::vector<std::uint8_t>> counter_trace;  ///< 6-bit counter per attempt
};

/// Discrete-event emulation of the hardware loop: pump (instantaneous charge
/// re-randomization), overhead wait, probe with timestamped photons; the 6-bit
/// photon counter is compared against nu on every rising edge, the probe stops
/// at the trigger, and only ionization is sampled during the final delay.
ControllerOutcome run_controller(const ProtocolConfig& cfg, const CalibrationConstants& cal,
                                 std::uint64_t seed, const ControllerOptions& options = {});

/// Ensemble summary of `shots` independent controller runs.
struct ProtocolStats {
    double fidelity = 0.0;
    double fidelity_se = 0.0;
    double attempts_mean = 0.0;
    double attempts_se = 0.0;
    double elapsed_mean_s = 0.0;
    std::uint64_t shots = 0;
    bool degenerate = false;  ///< single-shot ensembles carry infinite-width errors
};

ProtocolStats estimate_protocol_stats(const ProtocolConfig& cfg,
                                      const CalibrationConstants& cal, std::uint64_t shots,
                                      std::uint64_t seed,
                                      const ControllerOptions& options = {});

} // namespace nvrti
