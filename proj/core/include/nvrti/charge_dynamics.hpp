#pragma once

#include <string>

namespace nvrti {

/// Optical power in microwatts.
struct Power {
    double microwatts = 0.0;
};

/// Power-law coefficients for the red charge and emission dynamics.
///
/// The emission rates scale linearly with power and the charge transition
/// rates quadratically, valid well below optical saturation:
///   gamma_minus = c_minus * P
///   gamma_zero  = c_zero * P + dark
///   gamma_ion   = c_ion * P^2
///   gamma_rec   = c_rec * P^2
struct CalibrationConstants {
    double c_minus_hz_per_uw = 0.0;  ///< bright-state emission slope (Hz/uW)
    double c_zero_hz_per_uw = 0.0;   ///< neutral-state background slope (Hz/uW)
    double dark_hz = 0.0;            ///< dark-count rate (Hz), folded into gamma_zero
    double c_ion_hz_per_uw2 = 0.0;   ///< ionization coefficient (Hz/uW^2)
    double c_rec_hz_per_uw2 = 0.0;   ///< recombination coefficient (Hz/uW^2)

    // 1-sigma uncertainties of the calibration fit. Stored for reference;
    // not propagated through downstream calculations.
    double c_minus_err = 0.0;
    double c_zero_err = 0.0;
    double dark_err = 0.0;
    double c_ion_err = 0.0;
    double c_rec_err = 0.0;

    /// Checks invariants (non-negativity, c_minus > c_zero); throws validation_error.
    void validate() const;

    /// Bundled default calibration for the reference emitter.
    static CalibrationConstants defaults();
};

/// The four process rates at a fixed probe power, in hertz.
struct RateSet {
    double gamma_minus_hz = 0.0;  ///< photon detection rate while negative
    double gamma_zero_hz = 0.0;   ///< photon detection rate while neutral (incl. dark counts)
    double gamma_ion_hz = 0.0;    ///< negative -> neutral transition rate
    double gamma_rec_hz = 0.0;    ///< neutral -> negative transition rate

    void validate() const;
};

/// Exchanges the roles of the two charge states (emission and transition rates).
RateSet swapped(const RateSet& rates);

/// Evaluates the unsaturated power laws at probe power `p`.
/// Dark counts enter gamma_zero only. Powers above 200 uW are outside the
/// calibrated regime and emit a one-line warning on stderr (not an error).
RateSet rates_at_power(const CalibrationConstants& cal, Power p);

/// Steady-state negative-state population under constant illumination:
/// gamma_rec / (gamma_ion + gamma_rec). Throws if both transition rates are zero.
double steady_state_population(const RateSet& rates);

/// Inverts the steady-state relation: gamma_rec = p_minus/(1-p_minus) * gamma_ion.
/// Requires 0 <= p_minus < 1.
double recombination_from_steady_state(double gamma_ion_hz, double p_minus);

/// Loads calibration constants from a JSON config file (see README for the
/// schema; all dimensioned entries carry unit suffixes).
CalibrationConstants load_calibration(const std::string& path);

/// Parses the "calibration" section of an already-parsed config document.
CalibrationConstants parse_calibration_json(const std::string& json_text);

} // namespace nvrti
