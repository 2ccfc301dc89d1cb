#include "nvrti/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "nvrti/errors.hpp"
#include "nvrti/photon_model.hpp"

namespace nvrti {

void PhysicalConstants::validate() const {
    if (!(hbar_j_s > 0) || !(g_factor > 0) || !(mu_b_j_per_t > 0))
        throw validation_error("physical constants must be positive");
}

double readout_efficiency(double snr, double tau_i_s, double tau_o_s, double tau_r_s) {
    if (snr < 0.0) throw std::domain_error("SNR must be non-negative");
    if (tau_i_s < 0.0 || tau_o_s < 0.0 || tau_r_s < 0.0)
        throw std::domain_error("durations must be non-negative");
    const double total = tau_i_s + tau_o_s + tau_r_s;
    if (!(total > 0.0)) throw std::domain_error("total cycle time must be positive");
    return snr / std::sqrt(total);
}

double speedup(double xi, double xi_baseline) {
    if (!(xi_baseline > 0.0)) throw std::domain_error("baseline efficiency must be positive");
    if (xi < 0.0) throw std::domain_error("efficiency must be non-negative");
    const double r = xi / xi_baseline;
    return r * r;
}

double spin_readout_noise(double snr) {
    if (!(snr > 0.0)) throw std::domain_error("readout noise diverges at zero SNR");
    return std::sqrt(1.0 + 2.0 / (snr * snr));
}

double ac_sensitivity(double t2_s, double tau_i_s, double tau_r_s, double sigma_r,
                      const PhysicalConstants& constants) {
    constants.validate();
    if (!(t2_s > 0.0)) throw std::domain_error("T2 must be positive");
    if (tau_i_s < 0.0 || tau_r_s < 0.0) throw std::domain_error("durations must be non-negative");
    if (sigma_r < 0.0) throw std::domain_error("readout noise must be non-negative");
    const double prefactor =
        M_PI * constants.hbar_j_s / (2.0 * constants.g_factor * constants.mu_b_j_per_t);
    return prefactor * std::sqrt((t2_s + tau_i_s + tau_r_s) / (t2_s * t2_s)) * sigma_r;
}

const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::ssi_pl: return "SSI_PL";
        case Strategy::rti_pl: return "RTI_PL";
        case Strategy::ssi_scc: return "SSI_SCC";
        case Strategy::rti_scc: return "RTI_SCC";
    }
    return "?";
}

Strategy strategy_from_string(const std::string& name) {
    if (name == "SSI_PL") return Strategy::ssi_pl;
    if (name == "RTI_PL") return Strategy::rti_pl;
    if (name == "SSI_SCC") return Strategy::ssi_scc;
    if (name == "RTI_SCC") return Strategy::rti_scc;
    throw validation_error("unknown strategy '" + name +
                           "' (choices: SSI_PL, RTI_PL, SSI_SCC, RTI_SCC)");
}

namespace {

std::vector<double> log_spaced(double lo, double hi, std::size_t count) {
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    const double step = std::log(hi / lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = lo * std::exp(step * static_cast<double>(i));
    out.back() = hi;
    return out;
}

bool uses_rti(Strategy s) { return s == Strategy::rti_pl || s == Strategy::rti_scc; }
bool uses_scc(Strategy s) { return s == Strategy::ssi_scc || s == Strategy::rti_scc; }

} // namespace

SearchGrid SearchGrid::defaults() {
    SearchGrid g;
    g.probe_powers_uw = log_spaced(1.0, 200.0, 25);
    g.probe_durations_s = log_spaced(0.5e-6, 20e-6, 12);
    g.thresholds = {1, 2, 3};
    g.scc_read_durations_s = log_spaced(10e-6, 500e-6, 15);
    g.scc_read_powers_uw = log_spaced(5.0, 100.0, 10);
    g.scc_read_thresholds = {1, 2, 3};
    return g;
}

EfficiencyOptimizer::EfficiencyOptimizer(OptimizeSettings settings)
    : settings_(std::move(settings)) {
    const SearchGrid& grid = settings_.grid;
    if (grid.probe_powers_uw.empty() || grid.probe_durations_s.empty() ||
        grid.thresholds.empty() || grid.scc_read_durations_s.empty() ||
        grid.scc_read_powers_uw.empty() || grid.scc_read_thresholds.empty())
        throw std::domain_error("search grid has an empty axis");

    // Closed-form initialization predictions for every probe cell.
    for (double power : grid.probe_powers_uw) {
        for (double duration : grid.probe_durations_s) {
            for (std::int64_t nu : grid.thresholds) {
                ProtocolConfig cfg = settings_.protocol_template;
                cfg.probe_power_uw = power;
                cfg.probe_duration_s = duration;
                cfg.threshold = nu;
                try {
                    const ProtocolPrediction pred = predict_protocol(cfg, settings_.cal);
                    init_cells_.push_back({power, duration, nu, pred.fidelity,
                                           pred.init_time_s});
                } catch (const unreachable_threshold_error&) {
                    // cell cannot trigger; leave it out of the search
                }
            }
        }
    }
    if (init_cells_.empty())
        throw std::domain_error("no initialization cell has a reachable threshold");

    // Conditional readout tails for every SCC readout cell.
    for (double power : grid.scc_read_powers_uw) {
        for (double duration : grid.scc_read_durations_s) {
            const RateSet rates = rates_at_power(settings_.cal, Power{power});
            const PhotonDistribution minus =
                distribution_conditional(rates, duration, ChargeState::negative);
            const PhotonDistribution zero =
                distribution_conditional(rates, duration, ChargeState::neutral);
            ReadCell cell{power, duration, {}, {}};
            for (std::int64_t nu : grid.scc_read_thresholds) {
                cell.tail_minus.push_back(tail_probability(minus, nu));
                cell.tail_zero.push_back(tail_probability(zero, nu));
            }
            read_cells_.push_back(std::move(cell));
        }
    }
}

double EfficiencyOptimizer::pl_snr_at_fidelity(double fidelity, double polarization) const {
    const SpinObservableModel& pl = settings_.spins.pl;
    const auto pair = polarization_adjusted_pair(pl.s_tilde_0, pl.s_tilde_1, polarization,
                                                 settings_.spins.polarization_calibration);
    const double s0 = pair[0] * fidelity + pl.epsilon * (1.0 - fidelity);
    const double s1 = pair[1] * fidelity + pl.epsilon * (1.0 - fidelity);
    return pl_snr(s0, s1);
}

double EfficiencyOptimizer::scc_snr_at_fidelity(double fidelity, double polarization,
                                                const ReadCell& cell,
                                                std::size_t nu_index) const {
    const SpinObservableModel& scc = settings_.spins.scc;
    const auto pair = polarization_adjusted_pair(scc.s_tilde_0, scc.s_tilde_1, polarization,
                                                 settings_.spins.polarization_calibration);
    const double b0 = pair[0] * fidelity + scc.epsilon * (1.0 - fidelity);
    const double b1 = pair[1] * fidelity + scc.epsilon * (1.0 - fidelity);
    // The thresholded readout fires with probability b T_- + (1-b) T_0.
    const double tm = cell.tail_minus[nu_index];
    const double tz = cell.tail_zero[nu_index];
    const double o0 = b0 * tm + (1.0 - b0) * tz;
    const double o1 = b1 * tm + (1.0 - b1) * tz;
    if (o0 == o1) return 0.0;
    return scc_snr(o0, o1);
}

EfficiencyReport EfficiencyOptimizer::optimize(Strategy strategy, double tau_o_s) const {
    if (tau_o_s < 0.0) throw std::domain_error("operation time must be non-negative");

    const double polarization = uses_rti(strategy) ? settings_.spins.polarization_rti
                                                   : settings_.spins.polarization_ssi;

    struct Candidate {
        double xi = -1.0;
        double snr = 0.0;
        double tau_i = 0.0;
        double tau_r = 0.0;
        double fidelity = 0.0;
        const InitCell* init = nullptr;
        const ReadCell* read = nullptr;
        std::int64_t read_threshold = 0;
    };
    Candidate best;

    auto consider = [&](double snr, double tau_i, double tau_r, double fidelity,
                        const InitCell* init, const ReadCell* read, std::int64_t nu_r) {
        if (snr <= 0.0) return;
        const double xi = readout_efficiency(snr, tau_i, tau_o_s, tau_r);
        const bool better =
            xi > best.xi ||
            (xi == best.xi && (tau_i < best.tau_i ||
                               (tau_i == best.tau_i && tau_r < best.tau_r)));
        if (better) best = {xi, snr, tau_i, tau_r, fidelity, init, read, nu_r};
    };

    // Initialization candidates: the fixed SSI point or every RTI cell.
    std::vector<std::pair<double, double>> inits;  // (fidelity, tau_i)
    std::vector<const InitCell*> init_refs;
    if (uses_rti(strategy)) {
        for (const InitCell& cell : init_cells_) {
            inits.emplace_back(cell.fidelity, cell.tau_i_s);
            init_refs.push_back(&cell);
        }
    } else {
        inits.emplace_back(settings_.ssi_fidelity, settings_.ssi_init_time_s);
        init_refs.push_back(nullptr);
    }

    if (!uses_scc(strategy)) {
        for (std::size_t i = 0; i < inits.size(); ++i) {
            const double snr = pl_snr_at_fidelity(inits[i].first, polarization);
            consider(snr, inits[i].second, settings_.pl_window_s, inits[i].first,
                     init_refs[i], nullptr, 0);
        }
    } else {
        for (std::size_t i = 0; i < inits.size(); ++i) {
            for (const ReadCell& cell : read_cells_) {
                for (std::size_t k = 0; k < settings_.grid.scc_read_thresholds.size(); ++k) {
                    const double snr =
                        scc_snr_at_fidelity(inits[i].first, polarization, cell, k);
                    consider(snr, inits[i].second, cell.duration_s, inits[i].first,
                             init_refs[i], &cell, settings_.grid.scc_read_thresholds[k]);
                }
            }
        }
    }

    if (best.xi < 0.0) throw std::domain_error("no candidate produced a positive SNR");

    // Baseline for the speedup: the fixed SSI+PL point at the same tau_O.
    const double base_snr = pl_snr_at_fidelity(settings_.ssi_fidelity,
                                               settings_.spins.polarization_ssi);
    const double base_xi = readout_efficiency(base_snr, settings_.ssi_init_time_s, tau_o_s,
                                              settings_.pl_window_s);

    EfficiencyReport report;
    report.strategy = strategy;
    report.snr = best.snr;
    report.tau_i_s = best.tau_i;
    report.tau_o_s = tau_o_s;
    report.tau_r_s = best.tau_r;
    report.xi_sqrt_hz = best.xi;
    report.speedup_vs_baseline = speedup(best.xi, base_xi);
    report.sigma_r = spin_readout_noise(best.snr);
    report.fidelity = best.fidelity;
    report.protocol = settings_.protocol_template;
    if (best.init) {
        report.protocol.probe_power_uw = best.init->power_uw;
        report.protocol.probe_duration_s = best.init->duration_s;
        report.protocol.threshold = best.init->threshold;
    }
    if (best.read) {
        report.readout_power_uw = best.read->power_uw;
        report.readout_threshold = best.read_threshold;
    }
    return report;
}

EfficiencyReport optimize_protocol(Strategy strategy, double tau_o_s,
                                   const OptimizeSettings& settings) {
    return EfficiencyOptimizer(settings).optimize(strategy, tau_o_s);
}

std::vector<SpeedupPoint> speedup_curve(const std::vector<double>& tau_o_grid_s,
                                        const std::vector<Strategy>& strategies,
                                        const OptimizeSettings& settings) {
    if (tau_o_grid_s.empty()) throw std::domain_error("empty operation-time grid");
    const EfficiencyOptimizer optimizer(settings);
    std::vector<SpeedupPoint> out;
    out.reserve(tau_o_grid_s.size() * strategies.size());
    for (double tau_o : tau_o_grid_s)
        for (Strategy s : strategies)
            out.push_back({tau_o, s, optimizer.optimize(s, tau_o).speedup_vs_baseline});
    return out;
}

std::optional<double> break_even_time(Strategy strategy, const OptimizeSettings& settings,
                                      double tau_o_lo_s, double tau_o_hi_s,
                                      std::size_t points) {
    if (!(tau_o_lo_s > 0.0) || !(tau_o_hi_s > tau_o_lo_s) || points < 2)
        throw std::domain_error("bad break-even bracket");
    const EfficiencyOptimizer optimizer(settings);
    const std::vector<double> grid = log_spaced(tau_o_lo_s, tau_o_hi_s, points);
    double prev_tau = grid[0];
    double prev_val = optimizer.optimize(strategy, prev_tau).speedup_vs_baseline - 1.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double val = optimizer.optimize(strategy, grid[i]).speedup_vs_baseline - 1.0;
        if (prev_val <= 0.0 && val > 0.0) {
            const double frac = -prev_val / (val - prev_val);
            return prev_tau + frac * (grid[i] - prev_tau);
        }
        prev_tau = grid[i];
        prev_val = val;
    }
    return std::nullopt;
}

std::vector<TotalSnrPoint> simulate_snr_scaling(double obs0, double obs1, bool binomial,
                                                const std::vector<std::uint64_t>& cycle_grid,
                                                std::uint64_t replicas, std::uint64_t seed) {
    if (replicas < 3) throw std::domain_error("need at least three replicas");
    std::vector<TotalSnrPoint> out;
    out.reserve(cycle_grid.size());
    std::uint64_t stream = 0;
    for (std::uint64_t cycles : cycle_grid) {
        if (cycles == 0) throw std::domain_error("cycle counts must be positive");
        double sum = 0.0, sum_sq = 0.0;
        for (std::uint64_t r = 0; r < replicas; ++r) {
            SplitMix64 rng(SplitMix64::substream(seed, stream++));
            double acc0 = 0.0, acc1 = 0.0;
            for (std::uint64_t c = 0; c < cycles; ++c) {
                if (binomial) {
                    acc0 += rng.bernoulli(obs0) ? 1.0 : 0.0;
                    acc1 += rng.bernoulli(obs1) ? 1.0 : 0.0;
                } else {
                    acc0 += static_cast<double>(rng.poisson(obs0));
                    acc1 += static_cast<double>(rng.poisson(obs1));
                }
            }
            const double diff = (acc0 - acc1) / static_cast<double>(cycles);
            sum += diff;
            sum_sq += diff * diff;
        }
        const double n = static_cast<double>(replicas);
        const double mean = sum / n;
        const double var = std::max((sum_sq - sum * sum / n) / (n - 1.0), 1e-300);
        out.push_back({cycles, std::abs(mean) / std::sqrt(var)});
    }
    return out;
}

} // namespace nvrti
