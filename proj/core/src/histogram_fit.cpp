#include "nvrti/histogram_fit.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <istream>
#include <sstream>
#include <tuple>

#include "nvrti/errors.hpp"
#include "nvrti/photon_model.hpp"
#include "nvrti/simplex.hpp"

namespace nvrti {

void HistogramDataset::validate() const {
    std::uint64_t total = 0;
    for (const auto& [n, c] : counts) total += c;
    if (total != shots)
        throw validation_error("histogram occurrences (" + std::to_string(total) +
                               ") do not sum to shots (" + std::to_string(shots) + ")");
    if (!(t_r_s > 0.0)) throw validation_error("dataset needs a positive readout duration");
}

HistogramDataset HistogramDataset::from_empirical(const EmpiricalDistribution& e,
                                                  double power_uw, double t_r_s,
                                                  std::string label) {
    HistogramDataset d;
    d.counts = e.counts;
    d.shots = e.shots;
    d.power_uw = power_uw;
    d.t_r_s = t_r_s;
    d.label = std::move(label);
    return d;
}

ChargeFreeMask ChargeFreeMask::all_free() {
    return ChargeFreeMask{true, true, true, true, true};
}

ChargeFreeMask ChargeFreeMask::population_only() {
    return ChargeFreeMask{false, false, false, false, true};
}

namespace {

constexpr double kLogFloor = 1e-300;

double logit(double p) {
    const double eps = 1e-12;
    p = std::clamp(p, eps, 1.0 - eps);
    return std::log(p / (1.0 - p));
}

double inv_logit(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double gaussian(SplitMix64& rng) {
    // Box-Muller; one draw per call is plenty here.
    const double u1 = rng.uniform_pos();
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

enum class Transform { log_positive, logit_fraction, identity };

struct ParamSpec {
    std::string name;
    Transform transform;
    double init;
};

double to_search_space(double value, Transform t) {
    switch (t) {
        case Transform::log_positive:
            if (!(value > 0.0))
                throw validation_error("free positive parameter needs a positive init");
            return std::log(value);
        case Transform::logit_fraction:
            return logit(value);
        case Transform::identity:
            return value;
    }
    return value;
}

double from_search_space(double z, Transform t) {
    switch (t) {
        case Transform::log_positive:
            return std::exp(z);
        case Transform::logit_fraction:
            return inv_logit(z);
        case Transform::identity:
            return z;
    }
    return z;
}

/// Runs the simplex search with randomized restarts in transformed space and
/// packages the winner as a FitResult.
FitResult run_restarted_fit(const std::vector<ParamSpec>& specs,
                            const std::function<double(const std::vector<double>&)>& nll_physical,
                            int restarts, std::uint64_t seed,
                            const std::function<void(double)>& on_improvement) {
    std::vector<double> z0(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i)
        z0[i] = to_search_space(specs[i].init, specs[i].transform);

    auto unpack = [&](const std::vector<double>& z) {
        std::vector<double> theta(z.size());
        for (std::size_t i = 0; i < z.size(); ++i)
            theta[i] = from_search_space(z[i], specs[i].transform);
        return theta;
    };
    auto objective = [&](const std::vector<double>& z) { return nll_physical(unpack(z)); };

    SimplexResult best;
    best.objective = std::numeric_limits<double>::max();
    std::size_t total_iters = 0;
    SplitMix64 rng(seed);
    double global_best = std::numeric_limits<double>::max();
    const auto improvement_gate = [&](double v) {
        if (v < global_best) {
            global_best = v;
            if (on_improvement) on_improvement(v);
        }
    };
    for (int attempt = 0; attempt <= restarts; ++attempt) {
        std::vector<double> start = z0;
        if (attempt > 0)
            for (double& z : start) z += 0.3 * gaussian(rng);
        const SimplexResult r = nelder_mead(objective, start, {}, improvement_gate);
        total_iters += r.iterations;
        if (r.objective < best.objective) best = r;
    }

    FitResult result;
    result.objective = best.objective;
    result.converged = best.converged;
    result.iterations = total_iters;
    const std::vector<double> theta = unpack(best.best);
    for (std::size_t i = 0; i < specs.size(); ++i) result.parameters[specs[i].name] = theta[i];
    if (!result.converged) {
        result.diagnostics = "simplex search exhausted its budget before meeting tolerances";
        return result;
    }

    // Errors from the observed information in physical space; skipped when a
    // fraction sits on its boundary or the information matrix is not PD.
    bool boundary = false;
    for (std::size_t i = 0; i < specs.size(); ++i)
        if (specs[i].transform == Transform::logit_fraction &&
            (theta[i] < 1e-7 || theta[i] > 1.0 - 1e-7))
            boundary = true;
    if (boundary) {
        result.diagnostics = "parameter at boundary; standard errors omitted";
        return result;
    }
    const FisherResult fisher = observed_information_errors(nll_physical, theta);
    if (!fisher.positive_definite) {
        result.diagnostics = "information matrix not positive definite; errors omitted";
        return result;
    }
    for (std::size_t i = 0; i < specs.size(); ++i)
        result.standard_errors[specs[i].name] = fisher.standard_errors[i];
    return result;
}

/// Memoized conditional pmf pair, keyed by the exact rate tuple and duration.
class DistributionCache {
public:
    const std::pair<PhotonDistribution, PhotonDistribution>& get(const RateSet& rates,
                                                                 double t_r_s) {
        const Key key{rates.gamma_minus_hz, rates.gamma_zero_hz, rates.gamma_ion_hz,
                      rates.gamma_rec_hz, t_r_s};
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            it = cache_
                     .emplace(key,
                              std::make_pair(
                                  distribution_conditional(rates, t_r_s, ChargeState::negative),
                                  distribution_conditional(rates, t_r_s, ChargeState::neutral)))
                     .first;
        }
        return it->second;
    }

private:
    using Key = std::tuple<double, double, double, double, double>;
    std::map<Key, std::pair<PhotonDistribution, PhotonDistribution>> cache_;
};

double histogram_nll(const HistogramDataset& data,
                     const std::pair<PhotonDistribution, PhotonDistribution>& conditionals,
                     double p_minus) {
    const auto& [minus, zero] = conditionals;
    double nll = 0.0;
    for (const auto& [n, c] : data.counts) {
        const double pm = n < minus.pmf.size() ? minus.pmf[n] : 0.0;
        const double pz = n < zero.pmf.size() ? zero.pmf[n] : 0.0;
        const double p = p_minus * pm + (1.0 - p_minus) * pz;
        nll -= static_cast<double>(c) * std::log(std::max(p, kLogFloor));
    }
    return nll;
}

struct ChargeLayout {
    std::vector<ParamSpec> specs;
    // index into specs for each charge parameter, or -1 when fixed
    int idx_gm = -1, idx_gz = -1, idx_gi = -1, idx_gr = -1;
    std::vector<int> idx_p;  // one per dataset
};

ChargeLayout charge_layout(const ChargeFreeMask& mask, const ChargeParams& init,
                           const std::vector<double>& init_p, bool p_free) {
    ChargeLayout l;
    auto add = [&](const std::string& name, Transform t, double v) {
        l.specs.push_back({name, t, v});
        return static_cast<int>(l.specs.size()) - 1;
    };
    if (mask.gamma_minus)
        l.idx_gm = add("gamma_minus", Transform::log_positive, init.rates.gamma_minus_hz);
    if (mask.gamma_zero)
        l.idx_gz = add("gamma_zero", Transform::log_positive, init.rates.gamma_zero_hz);
    if (mask.gamma_ion)
        l.idx_gi = add("gamma_ion", Transform::log_positive, init.rates.gamma_ion_hz);
    if (mask.gamma_rec)
        l.idx_gr = add("gamma_rec", Transform::log_positive, init.rates.gamma_rec_hz);
    for (std::size_t k = 0; k < init_p.size(); ++k) {
        if (!p_free) {
            l.idx_p.push_back(-1);
            continue;
        }
        const std::string name =
            init_p.size() == 1 ? "p_minus" : "p_minus[" + std::to_string(k) + "]";
        l.idx_p.push_back(add(name, Transform::logit_fraction, init_p[k]));
    }
    return l;
}

FitResult fit_charge_internal(const std::vector<HistogramDataset>& datasets,
                              const ChargeFreeMask& mask, const ChargeParams& init,
                              const std::vector<double>& init_p, bool p_free, int restarts,
                              std::uint64_t seed,
                              const std::function<void(double)>& on_improvement) {
    for (const auto& d : datasets) {
        d.validate();
        if (d.shots < 100)
            std::cerr << "warning: histogram '" << d.label << "' has only " << d.shots
                      << " shots; fit results will be weakly constrained\n";
    }

    const ChargeLayout layout = charge_layout(mask, init, init_p, p_free);
    if (layout.specs.empty()) throw validation_error("no free parameters requested");

    DistributionCache cache;
    auto nll = [&](const std::vector<double>& theta) {
        RateSet rates = init.rates;
        if (layout.idx_gm >= 0) rates.gamma_minus_hz = theta[layout.idx_gm];
        if (layout.idx_gz >= 0) rates.gamma_zero_hz = theta[layout.idx_gz];
        if (layout.idx_gi >= 0) rates.gamma_ion_hz = theta[layout.idx_gi];
        if (layout.idx_gr >= 0) rates.gamma_rec_hz = theta[layout.idx_gr];
        double total = 0.0;
        for (std::size_t k = 0; k < datasets.size(); ++k) {
            const double p =
                layout.idx_p[k] >= 0 ? theta[layout.idx_p[k]] : init_p[k];
            total += histogram_nll(datasets[k], cache.get(rates, datasets[k].t_r_s), p);
        }
        return total;
    };

    return run_restarted_fit(layout.specs, nll, restarts, seed, on_improvement);
}

} // namespace

FitResult fit_charge_histogram(const HistogramDataset& data, const ChargeFitOptions& options) {
    return fit_charge_internal({data}, options.free, options.init, {options.init.p_minus},
                               options.free.p_minus, options.restarts, options.seed,
                               options.on_improvement);
}

FitResult joint_fit_histograms(const std::vector<HistogramDataset>& datasets,
                               const JointChargeFitOptions& options) {
    if (datasets.empty()) throw validation_error("joint fit needs at least one dataset");
    std::vector<double> init_p = options.init_p_minus;
    if (init_p.empty()) init_p.assign(datasets.size(), options.init.p_minus);
    if (init_p.size() != datasets.size())
        throw validation_error("init_p_minus size must match the dataset count");
    return fit_charge_internal(datasets, options.shared_free, options.init, init_p,
                               options.p_minus_free, options.restarts, options.seed,
                               options.on_improvement);
}

void CurveData::validate() const {
    if (x.size() != y.size()) throw validation_error("curve x/y size mismatch");
    if (!sigma.empty() && sigma.size() != x.size())
        throw validation_error("curve sigma size mismatch");
    for (double s : sigma)
        if (!(s > 0.0)) throw validation_error("curve sigmas must be positive");
}

namespace {

double curve_chi2(const CurveData& data, const std::vector<double>& model) {
    double chi2 = 0.0;
    for (std::size_t i = 0; i < data.y.size(); ++i) {
        const double s = data.sigma.empty() ? 1.0 : data.sigma[i];
        const double r = (data.y[i] - model[i]) / s;
        chi2 += r * r;
    }
    return chi2;
}

} // namespace

FitResult fit_coherence_curve(const CoherenceModel& init, const CurveData& data,
                              const CurveFitOptions& options) {
    data.validate();
    init.validate();

    std::set<std::string> free = options.free;
    if (free.empty()) {
        free = {"offset", "amplitude", "timescale"};
        if (init.kind == CoherenceModel::Kind::ramsey) {
            free.insert("detuning");
            free.insert("phase");
        }
        if (init.kind == CoherenceModel::Kind::hahn) free.insert("stretch");
    }

    std::vector<ParamSpec> specs;
    auto maybe = [&](const char* name, Transform t, double v) {
        if (free.count(name)) specs.push_back({name, t, v});
    };
    maybe("offset", Transform::identity, init.offset);
    maybe("amplitude", Transform::identity, init.amplitude);
    maybe("timescale", Transform::log_positive, init.timescale_s);
    maybe("detuning", Transform::identity, init.detuning_hz);
    maybe("hyperfine", Transform::identity, init.hyperfine_hz);
    maybe("phase", Transform::identity, init.phase_rad);
    maybe("stretch", Transform::log_positive, init.stretch);
    if (specs.empty()) throw validation_error("no free parameters requested");
    if (data.x.size() < specs.size() + 2)
        throw validation_error("need at least n_params + 2 samples");

    auto nll = [&](const std::vector<double>& theta) {
        CoherenceModel m = init;
        for (std::size_t i = 0; i < specs.size(); ++i) {
            const std::string& n = specs[i].name;
            if (n == "offset") m.offset = theta[i];
            else if (n == "amplitude") m.amplitude = theta[i];
            else if (n == "timescale") m.timescale_s = theta[i];
            else if (n == "detuning") m.detuning_hz = theta[i];
            else if (n == "hyperfine") m.hyperfine_hz = theta[i];
            else if (n == "phase") m.phase_rad = theta[i];
            else if (n == "stretch") m.stretch = theta[i];
        }
        std::vector<double> model(data.x.size());
        for (std::size_t i = 0; i < data.x.size(); ++i)
            model[i] = coherence_model_eval(m, data.x[i]);
        // chi^2 / 2 acts as the Gaussian negative log-likelihood
        return 0.5 * curve_chi2(data, model);
    };

    FitResult result = run_restarted_fit(specs, nll, options.restarts, options.seed, {});
    result.objective *= 2.0;  // report plain chi^2
    return result;
}

FitResult fit_lifetime_joint(const LifetimeModel& init, const LifetimeJointData& data,
                             const LifetimeFitOptions& options) {
    init.validate();
    const std::size_t n = data.t_s.size();
    if (n == 0 || data.y_before.size() != n || data.y_after.size() != n)
        throw validation_error("lifetime data needs matching t/before/after grids");
    if (!data.irf.empty()) {
        for (std::size_t i = 2; i < n; ++i) {
            const double d0 = data.t_s[1] - data.t_s[0];
            const double di = data.t_s[i] - data.t_s[i - 1];
            if (std::abs(di - d0) > 1e-9 * std::max(std::abs(d0), 1e-30))
                throw validation_error("IRF convolution requires a uniform time grid");
        }
    }

    std::vector<ParamSpec> specs;
    specs.push_back({"p0", Transform::logit_fraction, init.p0});
    if (options.fit_f_pi) specs.push_back({"f_pi", Transform::logit_fraction, init.f_pi});
    specs.push_back({"gamma0", Transform::log_positive, init.gamma0_hz});
    specs.push_back({"gamma1", Transform::log_positive, init.gamma1_hz});
    specs.push_back({"amplitude_before", Transform::identity, init.amplitude_before});
    specs.push_back({"amplitude_after", Transform::identity, init.amplitude_after});
    specs.push_back({"background", Transform::identity, init.background});
    if (2 * n < specs.size() + 2) throw validation_error("need at least n_params + 2 samples");

    CurveData before{data.t_s, data.y_before, data.sigma_before};
    CurveData after{data.t_s, data.y_after, data.sigma_after};
    before.validate();
    after.validate();

    auto nll = [&](const std::vector<double>& theta) {
        LifetimeModel m = init;
        std::size_t i = 0;
        m.p0 = theta[i++];
        if (options.fit_f_pi) m.f_pi = theta[i++];
        m.gamma0_hz = theta[i++];
        m.gamma1_hz = theta[i++];
        m.amplitude_before = theta[i++];
        m.amplitude_after = theta[i++];
        m.background = theta[i++];

        std::vector<double> mb = lifetime_response(m, LifetimeBranch::before, data.t_s);
        std::vector<double> ma = lifetime_response(m, LifetimeBranch::after, data.t_s);
        if (!data.irf.empty()) {
            const double dt = data.t_s.size() > 1 ? data.t_s[1] - data.t_s[0] : 1.0;
            mb = convolve_with_irf(mb, dt, data.irf, dt);
            ma = convolve_with_irf(ma, dt, data.irf, dt);
        }
        return 0.5 * (curve_chi2(before, mb) + curve_chi2(after, ma));
    };

    FitResult result = run_restarted_fit(specs, nll, options.restarts, options.seed, {});
    result.objective *= 2.0;
    return result;
}

HistogramDataset read_histogram_dataset_csv(std::istream& in, double power_uw, double t_r_s,
                                            std::string label) {
    const EmpiricalDistribution e = read_histogram_csv(in);
    return HistogramDataset::from_empirical(e, power_uw, t_r_s, std::move(label));
}

CurveData read_curve_csv(std::istream& in) {
    CurveData data;
    std::string line;
    bool header_seen = false;
    bool has_sigma = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line.rfind("x,y,sigma", 0) == 0)
                has_sigma = true;
            else if (line.rfind("x,y", 0) != 0)
                throw validation_error("curve CSV must start with 'x,y' or 'x,y,sigma'");
            header_seen = true;
            continue;
        }
        std::istringstream row(line);
        std::string a, b, c;
        if (!std::getline(row, a, ',') || !std::getline(row, b, ','))
            throw validation_error("malformed curve row at line " + std::to_string(lineno));
        data.x.push_back(std::stod(a));
        data.y.push_back(std::stod(b));
        if (has_sigma) {
            if (!std::getline(row, c))
                throw validation_error("missing sigma at line " + std::to_string(lineno));
            data.sigma.push_back(std::stod(c));
        }
    }
    if (!header_seen) throw validation_error("empty curve CSV");
    data.validate();
    return data;
}

} // namespace nvrti
