#include "timebin/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "timebin/analysis.hpp"
#include "timebin/analytic.hpp"
#include "timebin/montecarlo.hpp"
#include "timebin/pair_statistics.hpp"

namespace timebin {

namespace {

namespace fs = std::filesystem;

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::ofstream open_output(const fs::path& dir, const std::string& name,
                          std::vector<std::string>& files) {
    std::ofstream out(dir / name);
    if (!out) throw std::runtime_error("cannot write output file '" + (dir / name).string() + "'");
    files.push_back(name);
    return out;
}

void write_header(std::ostream& out, const char* kind, const ExperimentConfig& config) {
    out << "# timebin-lab " << kind << " v1\n";
    out << "# config " << to_json(config, -1) << "\n";
}

void write_windows_csv(std::ostream& out, const std::map<std::string, std::int64_t>& counts,
                       const ExperimentConfig& config) {
    write_header(out, "window-counts", config);
    out << "label,count\n";
    for (const auto& [label, count] : counts) out << label << ',' << count << '\n';
}

void require_preset_valid(const ExperimentConfig& config, bool needs_pulses, bool needs_scan) {
    const auto diagnostics = validate_config(config);
    if (!diagnostics.empty())
        throw std::invalid_argument("invalid config: " + diagnostics.front().str());
    if (needs_pulses && config.n_pulses == 0)
        throw std::invalid_argument(
            "invalid config: n_pulses = 0: a simulation preset needs at least one pulse");
    if (needs_scan && config.scan.points < 5)
        throw std::invalid_argument(
            "invalid config: scan.points = " + std::to_string(config.scan.points) +
            ": a fringe fit needs at least 5 phase points");
}

void run_analytic_tables(const ExperimentConfig& config, const fs::path& dir,
                         std::vector<std::string>& files) {
    {
        auto out = open_output(dir, "joint_table.csv", files);
        write_header(out, "joint-table", config);
        out << "bin_a,port_a,bin_b,port_b,probability\n";
        const JointDistribution dist = joint_detection_distribution(
            config.phases, config.pump_interferometer, config.analyzer_interferometers);
        for (int ba = 0; ba < kNumBins; ++ba)
            for (Port pa : {Port::minus, Port::plus})
                for (int bb = 0; bb < kNumBins; ++bb)
                    for (Port pb : {Port::minus, Port::plus})
                        out << ba << ',' << (pa == Port::minus ? '-' : '+') << ',' << bb << ','
                            << (pb == Port::minus ? '-' : '+') << ',' << fmt_g(dist.at(ba, pa, bb, pb))
                            << '\n';
    }
    {
        auto out = open_output(dir, "visibility_curve.csv", files);
        write_header(out, "visibility-curve", config);
        out << "mu,v_exact,v_linear,v_total\n";
        for (int i = 0; i <= 40; ++i) {
            const double mu = 0.005 * i;
            const VisibilityPrediction v = multiphoton_visibility(mu, config.intrinsic_visibility);
            out << fmt_g(mu) << ',' << fmt_g(v.v_exact) << ',' << fmt_g(v.v_linear) << ','
                << fmt_g(v.total_visibility()) << '\n';
        }
    }
}

void run_bell_scan(const ExperimentConfig& config, const fs::path& dir,
                   std::vector<std::string>& files) {
    require_preset_valid(config, true, true);
    if (!config.pump_interferometer || !config.analyzer_interferometers)
        throw std::invalid_argument(
            "invalid config: bell-scan requires pump_interferometer and analyzer_interferometers");

    const BellScanResult result = bell_scan(config);
    {
        auto out = open_output(dir, "fringe.csv", files);
        write_fringe_csv(out, result.scan, config);
    }
    {
        auto out = open_output(dir, "tac.csv", files);
        write_tac_csv(out, result.tac, config);
    }
    {
        auto out = open_output(dir, "windows.csv", files);
        write_windows_csv(out, count_windows(result.tac, bell_windows(config)), config);
    }
    // The fit can fail on degenerate scans; the CSVs above stay on disk.
    const VisibilityFit fit = fit_fringe(result.scan);
    auto out = open_output(dir, "fit.txt", files);
    write_header(out, "fringe-fit", config);
    out << "raw_v " << fmt_g(fit.raw_v) << "\n";
    out << "net_v " << fmt_g(fit.net_v) << "\n";
    out << "sigma_v " << fmt_g(fit.sigma_v) << "\n";
    out << "phase_offset_rad " << fmt_g(wrap_angle(fit.phase_offset)) << "\n";
    out << "amplitude " << fmt_g(fit.amplitude) << "\n";
    if (fit.sigma_v > 0.0)
        out << "chsh_std_devs " << fmt_g(chsh_significance(fit.net_v, fit.sigma_v)) << "\n";
}

void run_power_scan(const ExperimentConfig& config, const fs::path& dir,
                    std::vector<std::string>& files) {
    require_preset_valid(config, true, true);
    if (!config.pump_interferometer || !config.analyzer_interferometers)
        throw std::invalid_argument(
            "invalid config: power-scan requires pump_interferometer and analyzer_interferometers");

    const PowerScanResult result =
        power_scan_visibility(config.power_scan.mu_values, config.power_scan.pulses_per_point, config);
    {
        auto out = open_output(dir, "power.csv", files);
        write_power_csv(out, result, config);
    }
    auto out = open_output(dir, "fit.txt", files);
    write_header(out, "power-fit", config);
    out << "slope " << fmt_g(result.fit.slope) << "\n";
    out << "sigma_slope " << fmt_g(result.fit.sigma_slope) << "\n";
    out << "intercept " << fmt_g(result.fit.intercept) << "\n";
    out << "sigma_intercept " << fmt_g(result.fit.sigma_intercept) << "\n";
}

void run_sidepeak(const ExperimentConfig& config, const fs::path& dir,
                  std::vector<std::string>& files) {
    require_preset_valid(config, true, false);
    if (config.pump_interferometer || config.analyzer_interferometers)
        throw std::invalid_argument(
            "invalid config: sidepeak characterization runs without interferometers; disable "
            "pump_interferometer and analyzer_interferometers");

    const TacHistogram tac = tac_over_run(config);
    const auto counts = count_windows(tac, characterization_windows(config));
    {
        auto out = open_output(dir, "tac.csv", files);
        write_tac_csv(out, tac, config);
    }
    {
        auto out = open_output(dir, "windows.csv", files);
        write_windows_csv(out, counts, config);
    }

    const std::uint64_t main_counts = static_cast<std::uint64_t>(counts.at("central"));
    const std::uint64_t side_counts = static_cast<std::uint64_t>(counts.at("right_side"));
    auto out = open_output(dir, "ppair.txt", files);
    write_header(out, "ppair-estimate", config);
    out << "main_peak_counts " << main_counts << "\n";
    out << "right_side_counts " << side_counts << "\n";
    out << "left_side_counts " << counts.at("left_side") << "\n";
    out << "n_starts " << tac.n_starts << "\n";
    if (main_counts > 0) {
        const PpairEstimate raw = estimate_ppair_sidepeak(main_counts, side_counts);
        const PpairEstimate corrected =
            estimate_ppair_sidepeak(main_counts, side_counts, config.bob.channel);
        out << "sidepeak_raw " << fmt_g(raw.value) << " rel_unc " << fmt_g(raw.relative_uncertainty)
            << "\n";
        out << "sidepeak_corrected " << fmt_g(corrected.value) << " rel_unc "
            << fmt_g(corrected.relative_uncertainty) << "\n";
    } else {
        out << "sidepeak_raw nan rel_unc inf\n";
        out << "sidepeak_corrected nan rel_unc inf\n";
    }
    // Standard estimate from the measured start rate, with the 20 %
    // relative uncertainty on t and eta that a typical estimate carries.
    const double run_seconds =
        static_cast<double>(config.n_pulses) * static_cast<double>(config.pulse_period_ps) * 1e-12;
    const double pulse_rate_hz = 1e12 / static_cast<double>(config.pulse_period_ps);
    if (run_seconds > 0.0 && config.alice.channel.transmission > 0.0 &&
        config.alice.channel.efficiency > 0.0) {
        const double singles_hz = static_cast<double>(tac.n_starts) / run_seconds;
        const Uncertain t{config.alice.channel.transmission, 0.2 * config.alice.channel.transmission};
        const Uncertain eta{config.alice.channel.efficiency, 0.2 * config.alice.channel.efficiency};
        const PpairEstimate std_est = estimate_ppair_standard(singles_hz, t, eta, pulse_rate_hz);
        out << "standard " << fmt_g(std_est.value) << " rel_unc " << fmt_g(std_est.relative_uncertainty)
            << "\n";
    }
}

void run_tac_histogram(const ExperimentConfig& config, const fs::path& dir,
                       std::vector<std::string>& files, bool dump_events) {
    require_preset_valid(config, true, false);
    const TacHistogram tac = tac_over_run(config);
    {
        auto out = open_output(dir, "tac.csv", files);
        write_tac_csv(out, tac, config);
    }
    {
        auto out = open_output(dir, "windows.csv", files);
        const auto windows = config.analyzer_interferometers ? bell_windows(config)
                                                             : characterization_windows(config);
        write_windows_csv(out, count_windows(tac, windows), config);
    }
    if (dump_events) {
        const EventStream stream = simulate_run(config);
        auto out = open_output(dir, "events.txt", files);
        write_event_stream(out, stream);
    }
}

}  // namespace

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"bell-scan", "power-scan", "sidepeak",
                                                   "tac-histogram", "analytic-tables"};
    return names;
}

ExperimentConfig resolve_config(const std::string& preset, const RunOptions& options) {
    if (std::find(preset_names().begin(), preset_names().end(), preset) == preset_names().end())
        throw UsageError("unknown preset '" + preset + "'");

    ExperimentConfig base;
    if (preset == "sidepeak")
        base = default_characterization_config();
    else if (preset == "tac-histogram")
        base = default_bell_config();
    else
        base = default_bell_config();

    std::string doc;
    if (!options.config_path.empty()) {
        std::ifstream in(options.config_path);
        if (!in) throw std::runtime_error("cannot read config file '" + options.config_path + "'");
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        doc = text;
    } else {
        doc = to_json(base);
    }
    for (const std::string& kv : options.overrides) {
        if (kv.find('=') == std::string::npos || kv.front() == '=')
            throw UsageError("malformed --set override '" + kv + "', expected key=value");
        doc = apply_override(doc, kv);
    }
    ExperimentConfig config = config_from_json(doc);
    if (options.seed) config.seed = *options.seed;
    return config;
}

RunManifest run_preset(const std::string& preset, const RunOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    const ExperimentConfig config = resolve_config(preset, options);

    const fs::path dir(options.output_dir);
    fs::create_directories(dir);

    RunManifest manifest;
    manifest.preset = preset;
    manifest.config = config;
    manifest.output_dir = dir.string();
    manifest.seed = config.seed;

    if (preset == "analytic-tables")
        run_analytic_tables(config, dir, manifest.files);
    else if (preset == "bell-scan")
        run_bell_scan(config, dir, manifest.files);
    else if (preset == "power-scan")
        run_power_scan(config, dir, manifest.files);
    else if (preset == "sidepeak")
        run_sidepeak(config, dir, manifest.files);
    else if (preset == "tac-histogram")
        run_tac_histogram(config, dir, manifest.files, options.dump_events);

    manifest.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    auto out = open_output(dir, "manifest.txt", manifest.files);
    out << "preset " << manifest.preset << "\n";
    out << "output_dir " << manifest.output_dir << "\n";
    out << "seed " << manifest.seed << "\n";
    out << "duration_seconds " << fmt_g(manifest.duration_seconds) << "\n";
    out << "files";
    for (const std::string& f : manifest.files) out << ' ' << f;
    out << "\n";
    out << "config " << to_json(config, -1) << "\n";
    return manifest;
}

std::vector<Diagnostic> validate_config_file(const std::string& path) {
    return validate_config(load_config_file(path));
}

}  // namespace timebin
