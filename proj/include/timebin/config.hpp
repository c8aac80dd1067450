// Experiment configuration: every physical and numerical parameter of a
// simulated run, JSON (de)serialization, and invariant validation.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "timebin/analytic.hpp"
#include "timebin/pair_statistics.hpp"

namespace timebin {

// One detector arm. dark_rate is in Hz for a free-running detector and a
// probability per nanosecond while the gate is open for a gated one.
// detection_delay_ps models the optical or cable delay in front of the
// detector; the stop side needs one so its gate, triggered by the start
// detector, can be centered on the twin photon arrival without opening
// before the trigger click.
struct DetectorConfig {
    ChannelParams channel;
    double dark_rate = 0.0;
    bool gated = false;
    std::int64_t gate_offset_ps = 0;
    std::int64_t gate_width_ps = 0;
    std::int64_t detection_delay_ps = 0;
    double jitter_sigma_ps = 0.0;   // reserved, default off
    std::int64_t dead_time_ps = 0;  // reserved, default off

    bool operator==(const DetectorConfig&) const = default;
};

struct ScanConfig {
    std::string variable = "alice";  // which interferometer phase is scanned
    int points = 12;
    double start = 0.0;
    double span = 2.0 * kPi;  // points are placed at start + k * span / points

    bool operator==(const ScanConfig&) const = default;
};

struct PowerScanConfig {
    std::vector<double> mu_values = {0.02, 0.04, 0.06, 0.08, 0.10, 0.12, 0.14};
    // Pulses per fringe point for each mu; a single entry applies to all.
    std::vector<std::uint64_t> pulses_per_point = {200000};

    bool operator==(const PowerScanConfig&) const = default;
};

struct AnalysisConfig {
    std::int64_t tac_bin_width_ps = 50;
    std::int64_t tac_range_ps = 32895;  // histogram spans [-range, +range)
    std::int64_t window_half_width_ps = 300;
    // Offset of the window used to estimate noise-driven accidental
    // coincidences. Half a pulse period by default: that slot can contain
    // no photon, so the estimate is blind to photon-photon coincidences
    // and subtracting it preserves the multi-pair visibility reduction.
    std::int64_t accidental_offset_ps = 6579;

    bool operator==(const AnalysisConfig&) const = default;
};

struct ExperimentConfig {
    std::int64_t pulse_period_ps = 13158;  // 1 / 76 MHz to the nearest ps
    std::int64_t bin_separation_ps = 1200;
    std::uint64_t n_pulses = 100000;
    double mu = 0.05;                 // mean pairs per pulse
    bool exactly_one_pair = false;    // force N = 1 instead of Poisson(mu)
    bool pump_interferometer = true;
    bool analyzer_interferometers = true;
    double intrinsic_visibility = 1.0;
    PhaseSetting phases;
    DetectorConfig alice;
    DetectorConfig bob;
    std::uint64_t seed = 1;
    int chunk_count = 0;  // simulation chunks; 0 picks the hardware thread count

    ScanConfig scan;
    PowerScanConfig power_scan;
    AnalysisConfig analysis;

    bool operator==(const ExperimentConfig&) const = default;
};

// One violated configuration rule.
struct Diagnostic {
    std::string field;
    std::string value;
    std::string rule;

    std::string str() const { return field + " = " + value + ": " + rule; }
};

// Checks every ExperimentConfig invariant; empty result means valid.
std::vector<Diagnostic> validate_config(const ExperimentConfig& config);

// Throws std::invalid_argument naming the first violated field.
void require_valid(const ExperimentConfig& config);

// JSON round trip. Parsing is strict: unknown keys are reported as errors
// so that typos in config files and --set overrides do not pass silently.
std::string to_json(const ExperimentConfig& config, int indent = 2);
ExperimentConfig config_from_json(const std::string& json_text);
ExperimentConfig load_config_file(const std::string& path);

// Applies one "section.key=value" override to a JSON config document.
// Values are parsed as JSON scalars with bare-word fallback to string.
std::string apply_override(const std::string& json_text, const std::string& key_value);

// Paper-flavored default setups; see the presets in the runner.
ExperimentConfig default_bell_config();
ExperimentConfig default_characterization_config();

}  // namespace timebin
