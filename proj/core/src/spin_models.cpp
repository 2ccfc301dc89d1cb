#include "nvrti/spin_models.hpp"

#include <cmath>

#include <json.hpp>

#include "nvrti/errors.hpp"

namespace nvrti {

void SpinObservableModel::validate() const {
    if (kind == Kind::pl_photons) {
        if (s_tilde_0 < 0 || s_tilde_1 < 0 || epsilon < 0)
            throw validation_error("PL observables are photon means and must be >= 0");
    } else {
        auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
        if (!in01(s_tilde_0) || !in01(s_tilde_1) || !in01(epsilon))
            throw validation_error("SCC observables are probabilities and must lie in [0,1]");
    }
}

SpinObservableModel SpinObservableModel::pl_defaults() {
    SpinObservableModel m;
    m.kind = Kind::pl_photons;
    m.s_tilde_0 = 9.664e-2;
    m.s_tilde_1 = 5.254e-2;
    m.epsilon = 2.703e-6;
    return m;
}

SpinObservableModel SpinObservableModel::scc_defaults() {
    SpinObservableModel m;
    m.kind = Kind::scc_nv_minus_probability;
    m.s_tilde_0 = 0.1581;
    m.s_tilde_1 = 0.4778;
    m.epsilon = 0.0530;
    return m;
}

double observable_with_fidelity(const SpinObservableModel& model, int spin, double fidelity) {
    if (spin != 0 && spin != 1) throw std::domain_error("spin index must be 0 or 1");
    if (fidelity < 0.0 || fidelity > 1.0) throw std::domain_error("fidelity must lie in [0,1]");
    const double s = spin == 0 ? model.s_tilde_0 : model.s_tilde_1;
    return s * fidelity + model.epsilon * (1.0 - fidelity);
}

double pl_snr(double s0, double s1) {
    if (s0 < 0.0 || s1 < 0.0) throw std::domain_error("photon means must be non-negative");
    const double noise = s0 + s1;
    if (noise == 0.0) throw std::domain_error("SNR undefined for two dark observables");
    return std::abs(s0 - s1) / std::sqrt(noise);
}

double scc_snr(double b0, double b1) {
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in01(b0) || !in01(b1)) throw std::domain_error("probabilities must lie in [0,1]");
    const double var = b0 * (1.0 - b0) + b1 * (1.0 - b1);
    if (var == 0.0)
        throw std::domain_error("SNR undefined: both observables are deterministic");
    return std::abs(b0 - b1) / std::sqrt(var);
}

double scc_observed_probability(double b_true, const RateSet& rates, double t_r_s,
                                std::int64_t nu) {
    if (b_true < 0.0 || b_true > 1.0) throw std::domain_error("b_true must lie in [0,1]");
    const PhotonDistribution mix = distribution_mixture(rates, t_r_s, b_true);
    return tail_probability(mix, nu);
}

std::array<double, 2> polarization_adjusted_pair(double s0, double s1, double polarization,
                                                 double calibration_polarization) {
    auto contrast = [](double p) { return 2.0 * p - 1.0; };
    if (polarization < 0.5 || polarization > 1.0 || calibration_polarization <= 0.5 ||
        calibration_polarization > 1.0)
        throw std::domain_error("polarizations must lie in (0.5, 1]");
    const double scale = contrast(polarization) / contrast(calibration_polarization);
    const double mid = 0.5 * (s0 + s1);
    const double half_diff = 0.5 * (s0 - s1) * scale;
    return {mid + half_diff, mid - half_diff};
}

void LifetimeModel::validate() const {
    if (p0 < 0.0 || p0 > 1.0) throw validation_error("p0 must lie in [0,1]");
    if (f_pi < 0.0 || f_pi > 1.0) throw validation_error("f_pi must lie in [0,1]");
    if (!(gamma0_hz > 0.0) || !(gamma1_hz > 0.0))
        throw validation_error("optical decay rates must be positive");
}

PopulationVectors populations_before_after(double p0, double f_pi) {
    if (p0 < 0.0 || p0 > 1.0 || f_pi < 0.0 || f_pi > 1.0)
        throw std::domain_error("p0 and f_pi must lie in [0,1]");
    const double side = 0.5 * (1.0 - p0);
    PopulationVectors v;
    v.before = {side, side, p0};
    v.after = {side,
               side * (1.0 - f_pi) + p0 * f_pi,
               p0 * (1.0 - f_pi) + side * f_pi};
    return v;
}

std::vector<double> lifetime_response(const LifetimeModel& model, LifetimeBranch which,
                                      const std::vector<double>& t_s) {
    model.validate();
    const PopulationVectors pops = populations_before_after(model.p0, model.f_pi);
    const auto& p = which == LifetimeBranch::before ? pops.before : pops.after;
    const double amp =
        which == LifetimeBranch::before ? model.amplitude_before : model.amplitude_after;
    const double w0 = p[2];          // m_s = 0 weight
    const double w1 = p[0] + p[1];   // |m_s| = 1 weight

    std::vector<double> out;
    out.reserve(t_s.size());
    for (double t : t_s) {
        if (t < 0.0) throw std::domain_error("lifetime response requires t >= 0");
        out.push_back(amp * (w0 * std::exp(-model.gamma0_hz * t) +
                             w1 * std::exp(-model.gamma1_hz * t)) +
                      model.background);
    }
    return out;
}

std::vector<double> convolve_with_irf(const std::vector<double>& signal, double signal_dt_s,
                                      const std::vector<double>& irf, double irf_dt_s) {
    if (irf.empty()) throw validation_error("empty IRF kernel");
    if (!(signal_dt_s > 0.0) || !(irf_dt_s > 0.0))
        throw std::domain_error("sampling intervals must be positive");
    if (std::abs(signal_dt_s - irf_dt_s) > 1e-9 * signal_dt_s)
        throw std::domain_error("signal and IRF sampling intervals differ");
    double norm = 0.0;
    for (double v : irf) norm += v;
    if (std::abs(norm - 1.0) > 1e-9)
        throw validation_error("IRF kernel must be normalized to unit sum");

    std::vector<double> out(signal.size(), 0.0);
    for (std::size_t i = 0; i < signal.size(); ++i) {
        double acc = 0.0;
        const std::size_t k_top = std::min(i + 1, irf.size());
        for (std::size_t k = 0; k < k_top; ++k) acc += irf[k] * signal[i - k];
        out[i] = acc;
    }
    return out;
}

void CoherenceModel::validate() const {
    if (!(timescale_s > 0.0)) throw validation_error("coherence timescale must be positive");
    if (!(stretch > 0.0)) throw validation_error("stretch exponent must be positive");
}

double coherence_model_eval(const CoherenceModel& model, double tau_s) {
    model.validate();
    switch (model.kind) {
        case CoherenceModel::Kind::ramsey: {
            const double envelope =
                std::exp(-(tau_s / model.timescale_s) * (tau_s / model.timescale_s));
            double beats = 0.0;
            for (int k = -1; k <= 1; ++k)
                beats += std::cos(2.0 * M_PI * (model.detuning_hz - k * model.hyperfine_hz) *
                                      tau_s +
                                  model.phase_rad);
            return model.offset + model.amplitude * envelope * beats;
        }
        case CoherenceModel::Kind::hahn:
            return model.offset +
                   model.amplitude * std::exp(-std::pow(tau_s / model.timescale_s, model.stretch));
        case CoherenceModel::Kind::t1:
            return model.offset + model.amplitude * std::exp(-tau_s / model.timescale_s);
    }
    throw std::domain_error("unknown coherence model kind");
}

SpinModelSet parse_spin_models_json(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw validation_error(std::string("spin model config is not valid JSON: ") + e.what());
    }
    const nlohmann::json& s = doc.contains("spin") ? doc.at("spin") : doc;

    SpinModelSet set;
    auto number = [](const nlohmann::json& node, const char* key, double fallback) {
        if (!node.contains(key)) return fallback;
        return node.at(key).get<double>();
    };
    if (s.contains("pl")) {
        const auto& pl = s.at("pl");
        set.pl.s_tilde_0 = number(pl, "s0", set.pl.s_tilde_0);
        set.pl.s_tilde_1 = number(pl, "s1", set.pl.s_tilde_1);
        set.pl.epsilon = number(pl, "epsilon", set.pl.epsilon);
    }
    if (s.contains("scc")) {
        const auto& scc = s.at("scc");
        set.scc.s_tilde_0 = number(scc, "b0", set.scc.s_tilde_0);
        set.scc.s_tilde_1 = number(scc, "b1", set.scc.s_tilde_1);
        set.scc.epsilon = number(scc, "epsilon", set.scc.epsilon);
    }
    set.polarization_rti = number(s, "polarization_rti", set.polarization_rti);
    set.polarization_ssi = number(s, "polarization_ssi", set.polarization_ssi);
    set.polarization_calibration =
        number(s, "polarization_calibration", set.polarization_calibration);
    set.pl.validate();
    set.scc.validate();
    return set;
}

} // namespace nvrti
