#pragma once

#include "qdec/quadforms.hpp"

#include "json.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qdec {

constexpr int EXIT_VALIDATION = 2;
constexpr int EXIT_COMPUTATION = 3;
constexpr int EXIT_INTERNAL = 4;

extern const char* const TOOL_VERSION;

struct RunConfig {
    std::string command;
    std::string forms;   // path to a forms JSON file
    std::string preset;  // e.g. parabola(2), diag(1,1;1,2)
    std::optional<std::uint64_t> seed;
    unsigned samples = 0;     // 0 picks the command default
    std::vector<int> scales;  // dyadic exponents, meaning depends on the command
    std::string p = "6";
    std::string q = "6";
    std::string output = "runs";
    std::vector<std::string> inputs;  // run directories, report only
    nlohmann::json params = nlohmann::json::object();

    bool operator==(const RunConfig& o) const;
};

const std::vector<std::string>& command_names();
bool command_needs_seed(const std::string& command);

std::string config_to_toml(const RunConfig& c);
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
nlohmann::json config_to_json(const RunConfig& c);

// Fills in relative paths against base_dir and checks the command and seed.
RunConfig resolve_config(RunConfig c, const std::string& base_dir);

struct CommandOutput {
    nlohmann::json result;
    std::string csv;  // plot-ready series, empty if none
    std::string text; // human-readable table, empty if none
};

// Runs a resolved config without touching the filesystem (apart from reading inputs).
CommandOutput execute(const RunConfig& c);

struct RunRecord {
    nlohmann::json config;
    std::string version;
    double wall_time = 0.0;
    unsigned threads = 1;
    std::string run_dir;
    std::vector<std::string> outputs;
    std::map<std::string, std::string> digests;
};

nlohmann::json record_to_json(const RunRecord& r);
RunRecord run(const RunConfig& c);

struct ReportEntry {
    nlohmann::json record;  // run.json contents
    nlohmann::json result;  // result.json contents
};

CommandOutput emit_report(const std::vector<ReportEntry>& entries);

std::string sha256_hex(const std::string& data);

}  // namespace qdec
