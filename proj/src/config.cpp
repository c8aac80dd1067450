#include "timebin/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace timebin {

namespace {

using nlohmann::json;

void expect_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : keys)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known) throw std::invalid_argument("unknown config field '" + where + it.key() + "'");
    }
}

json detector_to_json(const DetectorConfig& d) {
    return json{{"transmission", d.channel.transmission},
                {"efficiency", d.channel.efficiency},
                {"filter_pass", d.channel.filter_pass},
                {"filter_pass_given_twin", d.channel.filter_pass_given_twin},
                {"dark_rate", d.dark_rate},
                {"gated", d.gated},
                {"gate_offset_ps", d.gate_offset_ps},
                {"gate_width_ps", d.gate_width_ps},
                {"detection_delay_ps", d.detection_delay_ps},
                {"jitter_sigma_ps", d.jitter_sigma_ps},
                {"dead_time_ps", d.dead_time_ps}};
}

void detector_from_json(const json& j, DetectorConfig& d, const std::string& where) {
    expect_keys(j,
                {"transmission", "efficiency", "filter_pass", "filter_pass_given_twin", "dark_rate",
                 "gated", "gate_offset_ps", "gate_width_ps", "detection_delay_ps", "jitter_sigma_ps",
                 "dead_time_ps"},
                where);
    if (j.contains("transmission")) d.channel.transmission = j.at("transmission").get<double>();
    if (j.contains("efficiency")) d.channel.efficiency = j.at("efficiency").get<double>();
    if (j.contains("filter_pass")) d.channel.filter_pass = j.at("filter_pass").get<double>();
    if (j.contains("filter_pass_given_twin"))
        d.channel.filter_pass_given_twin = j.at("filter_pass_given_twin").get<double>();
    if (j.contains("dark_rate")) d.dark_rate = j.at("dark_rate").get<double>();
    if (j.contains("gated")) d.gated = j.at("gated").get<bool>();
    if (j.contains("gate_offset_ps")) d.gate_offset_ps = j.at("gate_offset_ps").get<std::int64_t>();
    if (j.contains("gate_width_ps")) d.gate_width_ps = j.at("gate_width_ps").get<std::int64_t>();
    if (j.contains("detection_delay_ps"))
        d.detection_delay_ps = j.at("detection_delay_ps").get<std::int64_t>();
    if (j.contains("jitter_sigma_ps")) d.jitter_sigma_ps = j.at("jitter_sigma_ps").get<double>();
    if (j.contains("dead_time_ps")) d.dead_time_ps = j.at("dead_time_ps").get<std::int64_t>();
}

json config_to_json_value(const ExperimentConfig& c) {
    return json{{"pulse_period_ps", c.pulse_period_ps},
                {"bin_separation_ps", c.bin_separation_ps},
                {"n_pulses", c.n_pulses},
                {"mu", c.mu},
                {"exactly_one_pair", c.exactly_one_pair},
                {"pump_interferometer", c.pump_interferometer},
                {"analyzer_interferometers", c.analyzer_interferometers},
                {"intrinsic_visibility", c.intrinsic_visibility},
                {"phases", json{{"pump", c.phases.pump}, {"alice", c.phases.alice}, {"bob", c.phases.bob}}},
                {"alice", detector_to_json(c.alice)},
                {"bob", detector_to_json(c.bob)},
                {"seed", c.seed},
                {"chunk_count", c.chunk_count},
                {"scan",
                 json{{"variable", c.scan.variable},
                      {"points", c.scan.points},
                      {"start", c.scan.start},
                      {"span", c.scan.span}}},
                {"power_scan",
                 json{{"mu_values", c.power_scan.mu_values},
                      {"pulses_per_point", c.power_scan.pulses_per_point}}},
                {"analysis",
                 json{{"tac_bin_width_ps", c.analysis.tac_bin_width_ps},
                      {"tac_range_ps", c.analysis.tac_range_ps},
                      {"window_half_width_ps", c.analysis.window_half_width_ps},
                      {"accidental_offset_ps", c.analysis.accidental_offset_ps}}}};
}

ExperimentConfig config_from_json_value(const json& j) {
    expect_keys(j,
                {"pulse_period_ps", "bin_separation_ps", "n_pulses", "mu", "exactly_one_pair",
                 "pump_interferometer", "analyzer_interferometers", "intrinsic_visibility", "phases",
                 "alice", "bob", "seed", "chunk_count", "scan", "power_scan", "analysis"},
                "");
    ExperimentConfig c;
    if (j.contains("pulse_period_ps")) c.pulse_period_ps = j.at("pulse_period_ps").get<std::int64_t>();
    if (j.contains("bin_separation_ps"))
        c.bin_separation_ps = j.at("bin_separation_ps").get<std::int64_t>();
    if (j.contains("n_pulses")) c.n_pulses = j.at("n_pulses").get<std::uint64_t>();
    if (j.contains("mu")) c.mu = j.at("mu").get<double>();
    if (j.contains("exactly_one_pair")) c.exactly_one_pair = j.at("exactly_one_pair").get<bool>();
    if (j.contains("pump_interferometer"))
        c.pump_interferometer = j.at("pump_interferometer").get<bool>();
    if (j.contains("analyzer_interferometers"))
        c.analyzer_interferometers = j.at("analyzer_interferometers").get<bool>();
    if (j.contains("intrinsic_visibility"))
        c.intrinsic_visibility = j.at("intrinsic_visibility").get<double>();
    if (j.contains("phases")) {
        const json& p = j.at("phases");
        expect_keys(p, {"pump", "alice", "bob"}, "phases.");
        if (p.contains("pump")) c.phases.pump = p.at("pump").get<double>();
        if (p.contains("alice")) c.phases.alice = p.at("alice").get<double>();
        if (p.contains("bob")) c.phases.bob = p.at("bob").get<double>();
    }
    if (j.contains("alice")) detector_from_json(j.at("alice"), c.alice, "alice.");
    if (j.contains("bob")) detector_from_json(j.at("bob"), c.bob, "bob.");
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("chunk_count")) c.chunk_count = j.at("chunk_count").get<int>();
    if (j.contains("scan")) {
        const json& s = j.at("scan");
        expect_keys(s, {"variable", "points", "start", "span"}, "scan.");
        if (s.contains("variable")) c.scan.variable = s.at("variable").get<std::string>();
        if (s.contains("points")) c.scan.points = s.at("points").get<int>();
        if (s.contains("start")) c.scan.start = s.at("start").get<double>();
        if (s.contains("span")) c.scan.span = s.at("span").get<double>();
    }
    if (j.contains("power_scan")) {
        const json& s = j.at("power_scan");
        expect_keys(s, {"mu_values", "pulses_per_point"}, "power_scan.");
        if (s.contains("mu_values")) c.power_scan.mu_values = s.at("mu_values").get<std::vector<double>>();
        if (s.contains("pulses_per_point"))
            c.power_scan.pulses_per_point = s.at("pulses_per_point").get<std::vector<std::uint64_t>>();
    }
    if (j.contains("analysis")) {
        const json& a = j.at("analysis");
        expect_keys(a, {"tac_bin_width_ps", "tac_range_ps", "window_half_width_ps", "accidental_offset_ps"},
                    "analysis.");
        if (a.contains("tac_bin_width_ps"))
            c.analysis.tac_bin_width_ps = a.at("tac_bin_width_ps").get<std::int64_t>();
        if (a.contains("tac_range_ps")) c.analysis.tac_range_ps = a.at("tac_range_ps").get<std::int64_t>();
        if (a.contains("window_half_width_ps"))
            c.analysis.window_half_width_ps = a.at("window_half_width_ps").get<std::int64_t>();
        if (a.contains("accidental_offset_ps"))
            c.analysis.accidental_offset_ps = a.at("accidental_offset_ps").get<std::int64_t>();
    }
    return c;
}

void check_unit_interval(std::vector<Diagnostic>& out, const std::string& field, double v) {
    if (!(v >= 0.0 && v <= 1.0))
        out.push_back({field, std::to_string(v), "must be in [0, 1]"});
}

void validate_detector(std::vector<Diagnostic>& out, const std::string& prefix,
                       const DetectorConfig& d) {
    check_unit_interval(out, prefix + ".transmission", d.channel.transmission);
    check_unit_interval(out, prefix + ".efficiency", d.channel.efficiency);
    check_unit_interval(out, prefix + ".filter_pass", d.channel.filter_pass);
    check_unit_interval(out, prefix + ".filter_pass_given_twin", d.channel.filter_pass_given_twin);
    if (d.channel.filter_pass_given_twin < d.channel.filter_pass)
        out.push_back({prefix + ".filter_pass_given_twin", std::to_string(d.channel.filter_pass_given_twin),
                       "must be >= filter_pass (twin filter knowledge cannot reduce the pass probability)"});
    if (!(d.dark_rate >= 0.0))
        out.push_back({prefix + ".dark_rate", std::to_string(d.dark_rate), "must be non-negative"});
    if (d.gate_width_ps < 0)
        out.push_back({prefix + ".gate_width_ps", std::to_string(d.gate_width_ps), "must be >= 0"});
    if (d.gated && d.gate_offset_ps < 0)
        out.push_back({prefix + ".gate_offset_ps", std::to_string(d.gate_offset_ps),
                       "must be >= 0: a gate cannot open before the click that triggers it; add "
                       "detection_delay_ps on this side instead"});
    if (d.detection_delay_ps < 0)
        out.push_back({prefix + ".detection_delay_ps", std::to_string(d.detection_delay_ps),
                       "must be >= 0 (event times are non-negative)"});
    if (!(d.jitter_sigma_ps >= 0.0))
        out.push_back({prefix + ".jitter_sigma_ps", std::to_string(d.jitter_sigma_ps), "must be >= 0"});
    if (d.dead_time_ps < 0)
        out.push_back({prefix + ".dead_time_ps", std::to_string(d.dead_time_ps), "must be >= 0"});
}

}  // namespace

std::vector<Diagnostic> validate_config(const ExperimentConfig& c) {
    std::vector<Diagnostic> out;
    if (c.pulse_period_ps <= 0)
        out.push_back({"pulse_period_ps", std::to_string(c.pulse_period_ps), "must be positive"});
    if (c.bin_separation_ps <= 0)
        out.push_back({"bin_separation_ps", std::to_string(c.bin_separation_ps), "must be positive"});
    else if (c.pulse_period_ps > 0 && c.bin_separation_ps >= c.pulse_period_ps / 2)
        out.push_back({"bin_separation_ps", std::to_string(c.bin_separation_ps),
                       "must be < pulse_period_ps / 2, otherwise time-bin peaks alias onto "
                       "neighboring pulses"});
    if (!(c.mu >= 0.0 && c.mu < 0.5))
        out.push_back({"mu", std::to_string(c.mu), "must be in [0, 0.5)"});
    if (!(c.intrinsic_visibility >= 0.0 && c.intrinsic_visibility <= 1.0))
        out.push_back({"intrinsic_visibility", std::to_string(c.intrinsic_visibility), "must be in [0, 1]"});
    if (!std::isfinite(c.phases.pump) || !std::isfinite(c.phases.alice) || !std::isfinite(c.phases.bob))
        out.push_back({"phases", "non-finite", "all phases must be finite"});
    validate_detector(out, "alice", c.alice);
    validate_detector(out, "bob", c.bob);
    if (c.alice.gated)
        out.push_back({"alice.gated", "true",
                       "unsupported: the start detector is free-running, only the stop detector "
                       "can be gated"});
    if (c.chunk_count < 0)
        out.push_back({"chunk_count", std::to_string(c.chunk_count), "must be >= 0 (0 = auto)"});
    if (c.scan.points < 0) out.push_back({"scan.points", std::to_string(c.scan.points), "must be >= 0"});
    if (c.scan.variable != "alice" && c.scan.variable != "bob" && c.scan.variable != "pump")
        out.push_back({"scan.variable", c.scan.variable, "must be one of alice, bob, pump"});
    if (c.analysis.tac_bin_width_ps <= 0)
        out.push_back({"analysis.tac_bin_width_ps", std::to_string(c.analysis.tac_bin_width_ps),
                       "must be positive"});
    if (c.analysis.tac_range_ps <= 0)
        out.push_back({"analysis.tac_range_ps", std::to_string(c.analysis.tac_range_ps), "must be positive"});
    if (c.analysis.window_half_width_ps <= 0)
        out.push_back({"analysis.window_half_width_ps", std::to_string(c.analysis.window_half_width_ps),
                       "must be positive"});
    for (double mu : c.power_scan.mu_values)
        if (!(mu > 0.0 && mu < 0.5)) {
            out.push_back({"power_scan.mu_values", std::to_string(mu), "each mu must be in (0, 0.5)"});
            break;
        }
    if (c.power_scan.pulses_per_point.size() != 1 &&
        c.power_scan.pulses_per_point.size() != c.power_scan.mu_values.size())
        out.push_back({"power_scan.pulses_per_point", std::to_string(c.power_scan.pulses_per_point.size()),
                       "must hold one entry or one per mu value"});
    return out;
}

void require_valid(const ExperimentConfig& config) {
    const auto diagnostics = validate_config(config);
    if (!diagnostics.empty()) throw std::invalid_argument("invalid config: " + diagnostics.front().str());
}

std::string to_json(const ExperimentConfig& config, int indent) {
    return config_to_json_value(config).dump(indent);
}

ExperimentConfig config_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config JSON parse error: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config JSON must be an object");
    try {
        return config_from_json_value(j);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config JSON type error: ") + e.what());
    }
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return config_from_json(buf.str());
}

std::string apply_override(const std::string& json_text, const std::string& key_value) {
    const auto eq = key_value.find('=');
    if (eq == std::string::npos || eq == 0)
        throw std::invalid_argument("override must have the form key=value: '" + key_value + "'");
    const std::string path = key_value.substr(0, eq);
    const std::string raw = key_value.substr(eq + 1);

    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw;  // bare word, treat as string
    }

    json doc = json::parse(json_text);
    json* node = &doc;
    std::size_t begin = 0;
    while (true) {
        const auto dot = path.find('.', begin);
        const std::string key = path.substr(begin, dot == std::string::npos ? dot : dot - begin);
        if (key.empty()) throw std::invalid_argument("override path has an empty segment: '" + path + "'");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            break;
        }
        node = &(*node)[key];
        begin = dot + 1;
    }
    return doc.dump(2);
}

ExperimentConfig default_bell_config() {
    ExperimentConfig c;
    c.pulse_period_ps = 13158;
    c.bin_separation_ps = 1200;
    c.n_pulses = 200000;
    c.mu = 0.05;
    c.pump_interferometer = true;
    c.analyzer_interferometers = true;
    c.intrinsic_visibility = 0.98;
    // Start side: Ge APD, free running.
    c.alice.channel = {0.30, 0.10, 0.45, 0.45};
    c.alice.dark_rate = 20e3;  // Hz
    c.alice.gated = false;
    // Stop side: InGaAs APD, gated off the start detector, twin arrival at
    // gate center. The detection delay keeps the gate causal.
    c.bob.channel = {0.30, 0.30, 1.0, 1.0};
    c.bob.dark_rate = 1e-4;  // per ns while gated
    c.bob.gated = true;
    c.bob.detection_delay_ps = 2 * c.pulse_period_ps;
    c.bob.gate_width_ps = 50000;
    c.bob.gate_offset_ps = c.bob.detection_delay_ps - c.bob.gate_width_ps / 2;
    c.seed = 1;
    return c;
}

ExperimentConfig default_characterization_config() {
    ExperimentConfig c = default_bell_config();
    // Source characterization geometry: no interferometers, photons go
    // straight to the detectors.
    c.pump_interferometer = false;
    c.analyzer_interferometers = false;
    c.n_pulses = 20000000;
    c.alice.channel = {0.30, 0.09, 1.0, 1.0};
    c.bob.channel = {0.30, 0.30, 1.0, 1.0};
    return c;
}

}  // namespace timebin
