#pragma once

#include <string>

namespace nvrti {

// Canonical internal units are seconds, hertz and microwatts. Anything read
// from a config file or the command line must carry an explicit unit suffix;
// these helpers convert to canonical units on ingestion.

/// Parse a duration like "5us", "550ns", "7ms", "1.5e-6s" into seconds.
/// Throws validation_error for missing/unknown suffixes or negative values
/// where `allow_negative` is false.
double parse_duration(const std::string& text, bool allow_negative = false);

/// Parse a rate like "89.5kHz", "39Hz", "1.2MHz" into hertz.
double parse_rate(const std::string& text);

/// Parse an optical power like "100uW", "0.5mW" into microwatts.
double parse_power(const std::string& text);

/// Parse a bare dimensionless number ("0.75", "2"); suffixes are rejected.
double parse_number(const std::string& text);

} // namespace nvrti
