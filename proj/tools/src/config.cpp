#include "config.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nvrti/errors.hpp"
#include "nvrti/units.hpp"
#include "version.hpp"

namespace nvrti::cli {

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

void apply_protocol_section(const nlohmann::json& p, ProtocolConfig& cfg) {
    auto dur = [&](const char* key, double& target) {
        if (p.contains(key)) target = parse_duration(p.at(key).get<std::string>());
    };
    auto pow = [&](const char* key, double& target) {
        if (p.contains(key)) target = parse_power(p.at(key).get<std::string>());
    };
    pow("probe_power", cfg.probe_power_uw);
    dur("probe_duration", cfg.probe_duration_s);
    if (p.contains("threshold")) cfg.threshold = p.at("threshold").get<std::int64_t>();
    dur("pump_duration", cfg.pump_duration_s);
    pow("pump_power", cfg.pump_power_uw);
    dur("overhead", cfg.overhead_s);
    dur("delay", cfg.delay_s);
    if (p.contains("prior_p_minus")) cfg.prior_p_minus = p.at("prior_p_minus").get<double>();
}

} // namespace

ToolConfig load_tool_config(const std::string& path) {
    ToolConfig out;
    std::string effective = path;
    if (effective.empty()) {
        if (const char* env = std::getenv("NVRTI_CONFIG")) effective = env;
    }
    if (effective.empty()) {
        out.source = "defaults";
        out.config_hash = fnv1a("");
        return out;
    }

    std::ifstream in(effective);
    if (!in) throw validation_error("cannot open config file '" + effective + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // the parse error carries the byte offset of the failure
        throw validation_error("config '" + effective + "' is not valid JSON: " + e.what());
    }

    try {
        if (doc.contains("calibration")) out.cal = parse_calibration_json(text);
        if (doc.contains("protocol")) apply_protocol_section(doc.at("protocol"), out.protocol);
        if (doc.contains("spin")) out.spins = parse_spin_models_json(text);
        if (doc.contains("physical")) {
            const auto& ph = doc.at("physical");
            if (ph.contains("g_factor")) out.physical.g_factor = ph.at("g_factor").get<double>();
            if (ph.contains("hbar")) out.physical.hbar_j_s = ph.at("hbar").get<double>();
            if (ph.contains("mu_b")) out.physical.mu_b_j_per_t = ph.at("mu_b").get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw validation_error("config '" + effective + "': " + std::string(e.what()));
    }

    out.source = effective;
    out.config_hash = fnv1a(text);
    return out;
}

nlohmann::json RunManifest::to_json() const {
    return nlohmann::json{{"command", command},
                          {"config", config_source},
                          {"config_hash", config_hash},
                          {"seed", seed},
                          {"version", version},
                          {"timestamp", timestamp}};
}

std::string RunManifest::csv_header() const {
    std::ostringstream out;
    out << "# command: " << command << "\n";
    out << "# config: " << config_source << "\n";
    out << "# config_hash: " << config_hash << "\n";
    out << "# seed: " << seed << "\n";
    out << "# version: " << version << "\n";
    if (!timestamp.empty()) out << "# timestamp: " << timestamp << "\n";
    return out.str();
}

RunManifest make_manifest(const std::string& command, const ToolConfig& cfg,
                          std::uint64_t seed, bool stamp) {
    RunManifest m;
    m.command = command;
    m.config_source = cfg.source;
    m.config_hash = cfg.config_hash;
    m.seed = seed;
    m.version = NVRTI_VERSION;
    if (stamp) {
        char buf[32];
        const std::time_t now = std::time(nullptr);
        std::tm tm_utc{};
        gmtime_r(&now, &tm_utc);
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
        m.timestamp = buf;
    }
    return m;
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw validation_error("cannot write to '" + path + "'");
    out << text;
}

} // namespace nvrti::cli
