#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "nvrti/charge_dynamics.hpp"
#include "nvrti/optimizer.hpp"
#include "nvrti/rti_protocol.hpp"
#include "nvrti/spin_models.hpp"

namespace nvrti::cli {

/// Everything a command needs, assembled from defaults, an optional JSON
/// config file and command-line overrides (applied in that order).
struct ToolConfig {
    CalibrationConstants cal = CalibrationConstants::defaults();
    ProtocolConfig protocol;
    SpinModelSet spins;
    PhysicalConstants physical;

    std::string source;             ///< "defaults" or the config file path
    std::uint64_t config_hash = 0;  ///< FNV-1a of the raw config text
};

/// Loads `path` if non-empty, else $NVRTI_CONFIG if set, else defaults.
ToolConfig load_tool_config(const std::string& path);

/// FNV-1a 64-bit hash used for input provenance.
std::uint64_t fnv1a(const std::string& text);

/// Run provenance embedded in every emitted artifact. The timestamp stays
/// empty unless explicitly stamped so identical runs emit identical bytes.
struct RunManifest {
    std::string command;
    std::string config_source;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string version;
    std::string timestamp;

    nlohmann::json to_json() const;
    std::string csv_header() const;  ///< "# key: value" comment lines
};

RunManifest make_manifest(const std::string& command, const ToolConfig& cfg,
                          std::uint64_t seed, bool stamp);

/// Writes text to `path`, or stdout when path is empty.
void emit(const std::string& path, const std::string& text);

} // namespace nvrti::cli
