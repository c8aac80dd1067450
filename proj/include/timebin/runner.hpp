// Preset pipelines behind the command line tool: resolve a configuration,
// simulate, analyze, and write the plot-ready artifacts.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "timebin/config.hpp"

namespace timebin {

// Thrown for malformed invocations (unknown preset, bad override syntax);
// the CLI maps it to exit code 2. Configuration and runtime failures use
// the standard exception types and map to exit code 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunOptions {
    std::string config_path;             // empty: use the preset defaults
    std::vector<std::string> overrides;  // key=value, dotted paths
    std::string output_dir = ".";
    std::optional<std::uint64_t> seed;
    bool dump_events = false;  // write events.txt (single-run presets only)
};

struct RunManifest {
    std::string preset;
    ExperimentConfig config;
    std::string output_dir;
    std::vector<std::string> files;
    double duration_seconds = 0.0;
    std::uint64_t seed = 0;
};

const std::vector<std::string>& preset_names();

// Resolves the configuration (preset defaults, then the config file, then
// overrides, then the seed option) without running anything.
ExperimentConfig resolve_config(const std::string& preset, const RunOptions& options);

// Executes a preset pipeline and writes its artifacts plus manifest.txt
// into options.output_dir.
RunManifest run_preset(const std::string& preset, const RunOptions& options);

// Parses and validates a config file; I/O failures throw.
std::vector<Diagnostic> validate_config_file(const std::string& path);

}  // namespace timebin
