#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nvrti/charge_dynamics.hpp"
#include "nvrti/rti_protocol.hpp"
#include "nvrti/spin_models.hpp"

namespace nvrti {

struct PhysicalConstants {
    double hbar_j_s = 1.054571817e-34;
    double g_factor = 2.003;
    double mu_b_j_per_t = 9.2740100783e-24;

    void validate() const;
};

/// xi = SNR / sqrt(tau_I + tau_O + tau_R), in sqrt(Hz).
double readout_efficiency(double snr, double tau_i_s, double tau_o_s, double tau_r_s);

/// (xi / xi_baseline)^2: the factor by which integration time shrinks at
/// equal total SNR.
double speedup(double xi, double xi_baseline);

/// Readout noise relative to an ideal projective measurement for thresholded
/// readout: sqrt(1 + 2/SNR^2).
double spin_readout_noise(double snr);

/// Hahn-echo ac magnetic sensitivity:
/// (pi hbar / 2 g mu_B) sqrt((T2 + tau_I + tau_R) / T2^2) sigma_R.
double ac_sensitivity(double t2_s, double tau_i_s, double tau_r_s, double sigma_r,
                      const PhysicalConstants& constants = {});

enum class Strategy { ssi_pl, rti_pl, ssi_scc, rti_scc };

const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);

/// Search lattice for the protocol optimization.
struct SearchGrid {
    std::vector<double> probe_powers_uw;
    std::vector<double> probe_durations_s;
    std::vector<std::int64_t> thresholds;
    std::vector<double> scc_read_durations_s;
    std::vector<double> scc_read_powers_uw;
    std::vector<std::int64_t> scc_read_thresholds;

    /// Documented default lattice: 25 log-spaced powers in [1, 200] uW x
    /// 12 probe durations in [0.5, 20] us x thresholds {1,2,3}; SCC readout:
    /// 15 durations in [10, 500] us x 10 powers in [5, 100] uW x {1,2,3}.
    static SearchGrid defaults();
};

struct OptimizeSettings {
    CalibrationConstants cal = CalibrationConstants::defaults();
    SpinModelSet spins;
    SearchGrid grid = SearchGrid::defaults();
    ProtocolConfig protocol_template;  ///< pump/overhead/delay/prior defaults per cell
    double ssi_fidelity = 0.75;        ///< steady-state initialization baseline
    double ssi_init_time_s = 2e-6;
    double pl_window_s = 250e-9;       ///< fixed PL integration window
};

/// Winning protocol for one strategy and operation time.
struct EfficiencyReport {
    Strategy strategy = Strategy::ssi_pl;
    double snr = 0.0;
    double tau_i_s = 0.0;
    double tau_o_s = 0.0;
    double tau_r_s = 0.0;
    double xi_sqrt_hz = 0.0;
    double speedup_vs_baseline = 0.0;
    double sigma_r = 0.0;
    std::optional<double> eta_ac_t_per_sqrt_hz;
    double fidelity = 0.0;

    // chosen parameters (probe fields meaningful for RTI, readout for SCC)
    ProtocolConfig protocol;
    double readout_power_uw = 0.0;
    std::int64_t readout_threshold = 0;
};

/// Exhaustive, deterministic grid search maximizing xi. Ties break toward
/// smaller tau_I, then smaller tau_R, independent of evaluation order.
/// Building the search context costs a few seconds of quadrature; reuse an
/// EfficiencyOptimizer to sweep several operation times.
class EfficiencyOptimizer {
public:
    explicit EfficiencyOptimizer(OptimizeSettings settings);

    EfficiencyReport optimize(Strategy strategy, double tau_o_s) const;

private:
    struct InitCell {
        double power_uw;
        double duration_s;
        std::int64_t threshold;
        double fidelity;
        double tau_i_s;
    };
    struct ReadCell {
        double power_uw;
        double duration_s;
        std::vector<double> tail_minus;  ///< indexed like grid.scc_read_thresholds
        std::vector<double> tail_zero;
    };

    double pl_snr_at_fidelity(double fidelity, double polarization) const;
    double scc_snr_at_fidelity(double fidelity, double polarization,
                               const ReadCell& cell, std::size_t nu_index) const;

    OptimizeSettings settings_;
    std::vector<InitCell> init_cells_;
    std::vector<ReadCell> read_cells_;
};

EfficiencyReport optimize_protocol(Strategy strategy, double tau_o_s,
                                   const OptimizeSettings& settings);

struct SpeedupPoint {
    double tau_o_s;
    Strategy strategy;
    double speedup;
};

/// Speedup of each strategy against the SSI+PL baseline over an operation-time
/// grid, evaluated on a shared optimization context.
std::vector<SpeedupPoint> speedup_curve(const std::vector<double>& tau_o_grid_s,
                                        const std::vector<Strategy>& strategies,
                                        const OptimizeSettings& settings);

/// Locates the first speedup = 1 crossing of a strategy by sign change over a
/// dense tau_O grid, refined by linear interpolation. Returns nullopt if the
/// curve never crosses.
std::optional<double> break_even_time(Strategy strategy, const OptimizeSettings& settings,
                                      double tau_o_lo_s, double tau_o_hi_s,
                                      std::size_t points = 48);

/// Simulated total SNR after averaging repeated measurement cycles: `replicas`
/// independent pairs of N-cycle averages per grid point; the reported value is
/// mean(diff) / sd(diff). Poisson draws when `binomial` is false.
struct TotalSnrPoint {
    std::uint64_t cycles;
    double total_snr;
};

std::vector<TotalSnrPoint> simulate_snr_scaling(double obs0, double obs1, bool binomial,
                                                const std::vector<std::uint64_t>& cycle_grid,
                                                std::uint64_t replicas, std::uint64_t seed);

} // namespace nvrti
