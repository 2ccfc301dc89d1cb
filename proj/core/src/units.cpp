#include "nvrti/units.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <map>

#include "nvrti/errors.hpp"

namespace nvrti {

namespace {

// Splits "5.3ms" into (5.3, "ms"). The numeric part must parse completely.
std::pair<double, std::string> split_value_suffix(const std::string& text) {
    std::string s = text;
    s.erase(std::remove_if(s.begin(), s.end(),
                           [](unsigned char c) { return std::isspace(c); }),
            s.end());
    if (s.empty()) throw validation_error("empty quantity");

    const char* begin = s.c_str();
    char* end = nullptr;
    double value = std::strtod(begin, &end);
    if (end == begin) throw validation_error("no numeric value in '" + text + "'");
    return {value, std::string(end)};
}

double convert(const std::string& text, const std::map<std::string, double>& scales,
               const char* kind) {
    auto [value, suffix] = split_value_suffix(text);
    auto it = scales.find(suffix);
    if (it == scales.end()) {
        if (suffix.empty())
            throw validation_error(std::string("missing unit on ") + kind + " '" + text +
                                   "' (bare numbers are rejected for dimensioned fields)");
        throw validation_error(std::string("unknown ") + kind + " unit '" + suffix + "' in '" +
                               text + "'");
    }
    return value * it->second;
}

} // namespace

double parse_duration(const std::string& text, bool allow_negative) {
    static const std::map<std::string, double> scales = {
        {"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"ns", 1e-9}, {"ps", 1e-12}};
    double v = convert(text, scales, "duration");
    if (!allow_negative && v < 0) throw validation_error("negative duration '" + text + "'");
    return v;
}

double parse_rate(const std::string& text) {
    static const std::map<std::string, double> scales = {
        {"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}, {"GHz", 1e9},
        {"hz", 1.0}, {"khz", 1e3}, {"mhz", 1e6}};
    double v = convert(text, scales, "rate");
    if (v < 0) throw validation_error("negative rate '" + text + "'");
    return v;
}

double parse_power(const std::string& text) {
    static const std::map<std::string, double> scales = {
        {"uW", 1.0}, {"mW", 1e3}, {"W", 1e6}, {"nW", 1e-3},
        {"uw", 1.0}, {"mw", 1e3}};
    double v = convert(text, scales, "power");
    if (v < 0) throw validation_error("negative power '" + text + "'");
    return v;
}

double parse_number(const std::string& text) {
    auto [value, suffix] = split_value_suffix(text);
    if (!suffix.empty())
        throw validation_error("unexpected suffix '" + suffix + "' on dimensionless value '" +
                               text + "'");
    return value;
}

} // namespace nvrti
