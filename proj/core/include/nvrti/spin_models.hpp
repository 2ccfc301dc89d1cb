#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "nvrti/charge_dynamics.hpp"
#include "nvrti/photon_model.hpp"

namespace nvrti {

/// Spin-readout observable: mean detected photons (PL) or the probability of
/// finding the negative charge state after conversion (SCC).
struct SpinObservableModel {
    enum class Kind { pl_photons, scc_nv_minus_probability };
    Kind kind = Kind::pl_photons;
    double s_tilde_0 = 0.0;  ///< observable for m_s = 0 given a negative start
    double s_tilde_1 = 0.0;  ///< observable for |m_s| = 1 given a negative start
    double epsilon = 0.0;    ///< observable contribution of a neutral start

    void validate() const;

    /// Fitted constants for the reference emitter: mean photons in the first
    /// 250 ns of green illumination.
    static SpinObservableModel pl_defaults();
    /// Fitted constants for the reference emitter: negative-state probability
    /// after spin-to-charge conversion.
    static SpinObservableModel scc_defaults();
};

/// <S_i> = <S~_i> * F + <eps> * (1 - F).
double observable_with_fidelity(const SpinObservableModel& model, int spin, double fidelity);

/// Poissonian single-shot SNR: |s0 - s1| / sqrt(s0 + s1).
double pl_snr(double s0, double s1);

/// Binomial single-shot SNR: |b0 - b1| / sqrt(b0(1-b0) + b1(1-b1)).
double scc_snr(double b0, double b1);

/// Probability that a thresholded charge readout fires, given a true
/// negative-state probability b_true going into the readout window.
double scc_observed_probability(double b_true, const RateSet& rates, double t_r_s,
                                std::int64_t nu);

/// Rescales an observable pair for a protocol whose optical spin polarization
/// differs from the one the constants were calibrated at. Polarization mixes
/// the two spin responses, so the contrast scales by (2p-1)/(2p_cal-1) while
/// the midpoint is preserved.
std::array<double, 2> polarization_adjusted_pair(double s0, double s1, double polarization,
                                                 double calibration_polarization);

/// Parameters of the pulsed-lifetime polarization estimate.
struct LifetimeModel {
    double p0 = 0.9;             ///< ground-state m_s = 0 population
    double f_pi = 0.88;          ///< inversion-pulse fidelity
    double gamma0_hz = 8.0e7;    ///< optical decay rate, m_s = 0
    double gamma1_hz = 1.337e8;  ///< optical decay rate, |m_s| = 1
    double amplitude_before = 1.0;
    double amplitude_after = 1.0;
    double background = 0.0;

    void validate() const;
};

struct PopulationVectors {
    std::array<double, 3> before;  ///< (p_-1, p_+1, p_0)
    std::array<double, 3> after;
};

/// Spin projection populations before and after a calibrated inversion pulse.
PopulationVectors populations_before_after(double p0, double f_pi);

enum class LifetimeBranch { before, after };

/// f(t) = A_i (p0_i e^{-g0 t} + (p+1_i + p-1_i) e^{-g1 t}) + C on a time grid.
std::vector<double> lifetime_response(const LifetimeModel& model, LifetimeBranch which,
                                      const std::vector<double>& t_s);

/// Discrete linear convolution with a unit-sum kernel, truncated to the
/// signal grid. Both sequences must share the sampling interval; pass the
/// two intervals so the mismatch can be rejected.
std::vector<double> convolve_with_irf(const std::vector<double>& signal, double signal_dt_s,
                                      const std::vector<double>& irf, double irf_dt_s);

/// Coherence-decay model functions for the three standard measurements.
struct CoherenceModel {
    enum class Kind { ramsey, hahn, t1 };
    Kind kind = Kind::ramsey;
    double offset = 0.0;       ///< C
    double amplitude = 1.0;    ///< A
    double timescale_s = 1e-6; ///< T2*, T2 or T1
    double detuning_hz = 0.0;  ///< ramsey only
    double hyperfine_hz = 0.0; ///< ramsey only: parallel 14N coupling
    double phase_rad = 0.0;    ///< ramsey only
    double stretch = 1.0;      ///< hahn only

    void validate() const;
};

/// Evaluates the model at evolution time tau. Ramsey:
/// C + A e^{-(tau/T2*)^2} sum_{k=-1..1} cos(2 pi (delta - k A_par) tau + phi).
double coherence_model_eval(const CoherenceModel& model, double tau_s);

/// Parses the "spin" section of a JSON config (same unit-suffixed key/value
/// format as the calibration file).
struct SpinModelSet {
    SpinObservableModel pl = SpinObservableModel::pl_defaults();
    SpinObservableModel scc = SpinObservableModel::scc_defaults();
    double polarization_rti = 0.944;
    double polarization_ssi = 0.915;
    double polarization_calibration = 0.944;
};

SpinModelSet parse_spin_models_json(const std::string& json_text);

} // namespace nvrti
