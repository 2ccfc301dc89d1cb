#include "nvrti/charge_dynamics.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "nvrti/errors.hpp"
#include "nvrti/units.hpp"

namespace nvrti {

void CalibrationConstants::validate() const {
    if (c_minus_hz_per_uw < 0 || c_zero_hz_per_uw < 0 || dark_hz < 0 ||
        c_ion_hz_per_uw2 < 0 || c_rec_hz_per_uw2 < 0)
        throw validation_error("calibration constants must be non-negative");
    if (!(c_minus_hz_per_uw > c_zero_hz_per_uw))
        throw validation_error(
            "c_minus must exceed c_zero (the negative state is the bright one)");
}

CalibrationConstants CalibrationConstants::defaults() {
    CalibrationConstants c;
    c.c_minus_hz_per_uw = 895.0;
    c.c_zero_hz_per_uw = 16.3;
    c.dark_hz = 39.0;
    c.c_ion_hz_per_uw2 = 5.36;
    c.c_rec_hz_per_uw2 = 0.082;
    c.c_minus_err = 27.0;
    c.c_zero_err = 2.3;
    c.dark_err = 67.0;
    c.c_ion_err = 0.27;
    c.c_rec_err = 0.0041;
    return c;
}

void RateSet::validate() const {
    if (gamma_minus_hz < 0 || gamma_zero_hz < 0 || gamma_ion_hz < 0 || gamma_rec_hz < 0)
        throw validation_error("rates must be non-negative");
}

RateSet swapped(const RateSet& rates) {
    return RateSet{rates.gamma_zero_hz, rates.gamma_minus_hz, rates.gamma_rec_hz,
                   rates.gamma_ion_hz};
}

RateSet rates_at_power(const CalibrationConstants& cal, Power p) {
    if (p.microwatts < 0) throw std::domain_error("probe power must be non-negative");
    if (p.microwatts > 200.0)
        std::cerr << "warning: probe power " << p.microwatts
                  << " uW is above the calibrated regime (<= 200 uW)\n";
    const double pw = p.microwatts;
    RateSet r;
    r.gamma_minus_hz = cal.c_minus_hz_per_uw * pw;
    r.gamma_zero_hz = cal.c_zero_hz_per_uw * pw + cal.dark_hz;
    r.gamma_ion_hz = cal.c_ion_hz_per_uw2 * pw * pw;
    r.gamma_rec_hz = cal.c_rec_hz_per_uw2 * pw * pw;
    return r;
}

double steady_state_population(const RateSet& rates) {
    const double total = rates.gamma_ion_hz + rates.gamma_rec_hz;
    if (total <= 0.0)
        throw std::domain_error(
            "steady-state population undefined: both transition rates are zero");
    return rates.gamma_rec_hz / total;
}

double recombination_from_steady_state(double gamma_ion_hz, double p_minus) {
    if (p_minus < 0.0 || p_minus > 1.0)
        throw std::domain_error("p_minus must lie in [0,1]");
    if (p_minus == 1.0)
        throw std::domain_error("p_minus = 1 implies a divergent recombination rate");
    return p_minus / (1.0 - p_minus) * gamma_ion_hz;
}

namespace {

double field_or(const nlohmann::json& j, const char* key, double fallback,
                double (*parse)(const std::string&)) {
    if (!j.contains(key)) return fallback;
    return parse(j.at(key).get<std::string>());
}

} // namespace

CalibrationConstants parse_calibration_json(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw validation_error(std::string("calibration config is not valid JSON: ") + e.what());
    }
    const nlohmann::json& c = doc.contains("calibration") ? doc.at("calibration") : doc;

    CalibrationConstants out = CalibrationConstants::defaults();
    try {
        // Slopes are stated per microwatt; values carry rate suffixes.
        if (c.contains("c_minus_per_uw"))
            out.c_minus_hz_per_uw = parse_rate(c.at("c_minus_per_uw").get<std::string>());
        if (c.contains("c_zero_per_uw"))
            out.c_zero_hz_per_uw = parse_rate(c.at("c_zero_per_uw").get<std::string>());
        out.dark_hz = field_or(c, "dark", out.dark_hz, parse_rate);
        if (c.contains("c_ion_per_uw2"))
            out.c_ion_hz_per_uw2 = parse_rate(c.at("c_ion_per_uw2").get<std::string>());
        if (c.contains("c_rec_per_uw2"))
            out.c_rec_hz_per_uw2 = parse_rate(c.at("c_rec_per_uw2").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(std::string("bad calibration entry: ") + e.what());
    }
    out.validate();
    return out;
}

CalibrationConstants load_calibration(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open calibration file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_calibration_json(buffer.str());
}

} // namespace nvrti
