#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "nvrti/charge_dynamics.hpp"
#include "nvrti/spin_models.hpp"
#include "nvrti/telegraph_mc.hpp"

namespace nvrti {

/// A measured (or simulated) photon-count histogram with its readout context.
struct HistogramDataset {
    std::map<std::uint64_t, std::uint64_t> counts;
    std::uint64_t shots = 0;
    double power_uw = 0.0;  ///< context only; rates are fit directly
    double t_r_s = 0.0;
    std::string label;

    void validate() const;

    static HistogramDataset from_empirical(const EmpiricalDistribution& e, double power_uw,
                                           double t_r_s, std::string label);
};

/// Outcome of a maximum-likelihood or least-squares fit.
struct FitResult {
    std::map<std::string, double> parameters;
    std::map<std::string, double> standard_errors;  ///< only when converged and info matrix is PD
    double objective = 0.0;  ///< final negative log-likelihood or chi^2
    bool converged = false;
    std::size_t iterations = 0;
    std::string diagnostics;
};

/// Charge-model parameter bundle for histogram fits.
struct ChargeParams {
    RateSet rates;
    double p_minus = 0.75;
};

struct ChargeFreeMask {
    bool gamma_minus = false;
    bool gamma_zero = false;
    bool gamma_ion = false;
    bool gamma_rec = false;
    bool p_minus = true;

    static ChargeFreeMask all_free();
    static ChargeFreeMask population_only();
};

struct ChargeFitOptions {
    ChargeFreeMask free;
    ChargeParams init;
    int restarts = 3;
    std::uint64_t seed = 0x9ec4b2d1;  ///< restart jitter stream
    std::function<void(double)> on_improvement;  ///< fires on accepted objective improvements
};

/// Multinomial maximum-likelihood fit of one histogram to the charge
/// distribution model. Free parameters move in transformed space (log for
/// rates, logit for the population) so bounds cannot be violated; fixed
/// parameters are pinned at their init values. Distribution evaluations are
/// memoized per (rates, t_R), so population-only steps do not repeat the
/// quadrature.
FitResult fit_charge_histogram(const HistogramDataset& data, const ChargeFitOptions& options);

struct JointChargeFitOptions {
    ChargeFreeMask shared_free;          ///< rate components shared across datasets
    ChargeParams init;                   ///< shared initial rates
    std::vector<double> init_p_minus;    ///< per-dataset inits (empty: use init.p_minus)
    bool p_minus_free = true;            ///< fit one population per dataset
    int restarts = 3;
    std::uint64_t seed = 0x51a3c0de;
    std::function<void(double)> on_improvement;
};

/// Joint likelihood over several histograms with one shared rate set and one
/// negative-state population per dataset (parameters "p_minus[k]").
FitResult joint_fit_histograms(const std::vector<HistogramDataset>& datasets,
                               const JointChargeFitOptions& options);

/// (x, y, sigma) samples; empty sigma means unweighted least squares.
struct CurveData {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> sigma;

    void validate() const;
};

struct CurveFitOptions {
    std::set<std::string> free;  ///< parameter names; empty selects the kind's defaults
    int restarts = 3;
    std::uint64_t seed = 0x7e11f00d;
};

/// Weighted least-squares fit of a coherence decay curve. Parameter names:
/// offset, amplitude, timescale, detuning, hyperfine, phase (ramsey),
/// stretch (hahn).
FitResult fit_coherence_curve(const CoherenceModel& init, const CurveData& data,
                              const CurveFitOptions& options = {});

/// Paired lifetime transients sharing one time grid. A non-empty `irf` is
/// convolved with both model curves before comparison (uniform grid required).
struct LifetimeJointData {
    std::vector<double> t_s;
    std::vector<double> y_before;
    std::vector<double> y_after;
    std::vector<double> sigma_before;  ///< may be empty
    std::vector<double> sigma_after;   ///< may be empty
    std::vector<double> irf;           ///< unit-sum kernel; empty disables convolution
};

struct LifetimeFitOptions {
    bool fit_f_pi = false;  ///< the pulse fidelity is normally calibrated externally
    int restarts = 3;
    std::uint64_t seed = 0xabcd1234;
};

/// Joint fit of the before/after inversion transients. The decay rates,
/// population, pulse fidelity and background are shared; each branch keeps its
/// own amplitude. Parameters: p0, f_pi, gamma0, gamma1, amplitude_before,
/// amplitude_after, background.
FitResult fit_lifetime_joint(const LifetimeModel& init, const LifetimeJointData& data,
                             const LifetimeFitOptions& options = {});

/// CSV ingestion for histograms (header "n,count"; comment lines start with
/// '#'; missing n are zero) and curves (header "x,y" or "x,y,sigma").
HistogramDataset read_histogram_dataset_csv(std::istream& in, double power_uw, double t_r_s,
                                            std::string label);
CurveData read_curve_csv(std::istream& in);

} // namespace nvrti
