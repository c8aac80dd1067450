#include "timebin/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "timebin/montecarlo.hpp"

namespace timebin {

namespace {

constexpr std::uint64_t kScanChunkPulses = 1ull << 21;

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::vector<std::int64_t> detector_times(const EventStream& stream, Detector d) {
    std::vector<std::int64_t> times;
    for (const DetectionEvent& e : stream.events)
        if (e.detector == d) times.push_back(e.time_ps);
    return times;  // stream is time ordered, so this is sorted
}

bool in_pulse_range(const DetectionEvent& e, const std::optional<PulseRange>& range) {
    if (!range) return true;
    return e.pulse_index >= range->first && e.pulse_index < range->first + range->count;
}

// Stop minus start delay corrected for the fixed detection path difference.
std::int64_t delay_correction(const ExperimentConfig& config) {
    return config.bob.detection_delay_ps - config.alice.detection_delay_ps;
}

// True if a sorted time list has an entry in [lo, hi).
bool any_in(const std::vector<std::int64_t>& times, std::int64_t lo, std::int64_t hi) {
    auto it = std::lower_bound(times.begin(), times.end(), lo);
    return it != times.end() && *it < hi;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
    return a >= 0 ? (a + b - 1) / b : -((-a) / b);
}

// Weighted least squares on the basis (1, cos x, sin x). Returns the
// coefficients and their covariance.
struct HarmonicFit {
    std::array<double, 3> beta{};
    std::array<std::array<double, 3>, 3> cov{};
};

HarmonicFit fit_harmonics(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& variance) {
    std::array<std::array<double, 3>, 3> m{};  // X^T W X
    std::array<double, 3> rhs{};
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double w = 1.0 / variance[i];
        const std::array<double, 3> row{1.0, std::cos(x[i]), std::sin(x[i])};
        for (int r = 0; r < 3; ++r) {
            rhs[r] += w * row[r] * y[i];
            for (int c = 0; c < 3; ++c) m[r][c] += w * row[r] * row[c];
        }
    }
    // Invert the 3x3 normal matrix by Gauss-Jordan with partial pivoting.
    std::array<std::array<double, 6>, 3> aug{};
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) aug[r][c] = m[r][c];
        aug[r][3 + r] = 1.0;
    }
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(aug[r][col]) > std::abs(aug[pivot][col])) pivot = r;
        if (std::abs(aug[pivot][col]) < 1e-12)
            throw std::runtime_error("fringe fit failed: singular design matrix");
        std::swap(aug[col], aug[pivot]);
        const double inv = 1.0 / aug[col][col];
        for (int c = 0; c < 6; ++c) aug[col][c] *= inv;
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            const double f = aug[r][col];
            for (int c = 0; c < 6; ++c) aug[r][c] -= f * aug[col][c];
        }
    }
    HarmonicFit fit;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) fit.cov[r][c] = aug[r][3 + c];
    for (int r = 0; r < 3; ++r) {
        double v = 0.0;
        for (int c = 0; c < 3; ++c) v += fit.cov[r][c] * rhs[c];
        fit.beta[r] = v;
    }
    return fit;
}

// Fitted visibility of A (1 - V cos(x - offset)) from the harmonic
// coefficients.
double visibility_of(const HarmonicFit& f) {
    const double a = f.beta[0];
    if (!(a > 0.0)) throw std::runtime_error("fringe fit failed: non-positive baseline");
    return std::sqrt(f.beta[1] * f.beta[1] + f.beta[2] * f.beta[2]) / a;
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    return mix64(seed ^ mix64(tag + 0x9E3779B97F4A7C15ULL * (index + 1)));
}

constexpr std::uint64_t kScanPointTag = 0x7363616eULL;   // fringe scan points
constexpr std::uint64_t kPowerPointTag = 0x706f7772ULL;  // power scan points

struct ScanAccumulator {
    FringeScan scan;
    TacHistogram tac;
    bool want_tac = false;
};

void run_scan(const ExperimentConfig& config, ScanAccumulator& acc) {
    if (config.scan.points <= 0) return;
    const std::uint64_t margin = analysis_margin_pulses(config);
    if (acc.want_tac) {
        acc.tac.bin_width_ps = config.analysis.tac_bin_width_ps;
        acc.tac.t_min_ps = -config.analysis.tac_range_ps;
        acc.tac.t_max_ps = config.analysis.tac_range_ps;
        const std::size_t n_bins = static_cast<std::size_t>(
            ceil_div(acc.tac.t_max_ps - acc.tac.t_min_ps, acc.tac.bin_width_ps));
        acc.tac.counts.assign(n_bins, 0);
    }
    for (int k = 0; k < config.scan.points; ++k) {
        const double phase =
            config.scan.start + config.scan.span * static_cast<double>(k) / config.scan.points;
        ExperimentConfig point = config;
        point.seed = sub_seed(config.seed, kScanPointTag, static_cast<std::uint64_t>(k));
        if (config.scan.variable == "alice")
            point.phases.alice = phase;
        else if (config.scan.variable == "bob")
            point.phases.bob = phase;
        else
            point.phases.pump = phase;

        FringePoint fp;
        fp.phase = phase;
        fp.n_pulses = config.n_pulses;
        for_each_chunk(point, kScanChunkPulses, margin, [&](const ChunkStream& chunk) {
            TripleCoincidenceOptions opt;
            opt.starts_from = PulseRange{chunk.core_first, chunk.core_count};
            const TripleCoincidenceCounts counts = triple_coincidence_counts(chunk.stream, opt);
            fp.triple_count += counts.interfering;
            fp.accidental_count += counts.accidental;
            if (acc.want_tac) {
                acc.tac.add(build_tac_histogram(chunk.stream, acc.tac.bin_width_ps, acc.tac.t_min_ps,
                                                acc.tac.t_max_ps,
                                                PulseRange{chunk.core_first, chunk.core_count}));
            }
        });
        acc.scan.push_back(fp);
    }
}

}  // namespace

std::int64_t TacHistogram::total() const noexcept {
    std::int64_t s = 0;
    for (std::int64_t c : counts) s += c;
    return s;
}

void TacHistogram::add(const TacHistogram& other) {
    if (other.bin_width_ps != bin_width_ps || other.t_min_ps != t_min_ps ||
        other.t_max_ps != t_max_ps || other.counts.size() != counts.size())
        throw std::invalid_argument("TacHistogram::add: incompatible histogram geometry");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
    n_starts += other.n_starts;
}

TacHistogram build_tac_histogram(const EventStream& stream, std::int64_t bin_width_ps,
                                 std::int64_t t_min_ps, std::int64_t t_max_ps,
                                 std::optional<PulseRange> starts_from) {
    if (bin_width_ps <= 0) throw std::invalid_argument("build_tac_histogram: bin width must be positive");
    if (t_max_ps <= t_min_ps)
        throw std::invalid_argument("build_tac_histogram: histogram range must be non-empty");
    TacHistogram hist;
    hist.bin_width_ps = bin_width_ps;
    hist.t_min_ps = t_min_ps;
    hist.t_max_ps = t_max_ps;
    hist.counts.assign(static_cast<std::size_t>(ceil_div(t_max_ps - t_min_ps, bin_width_ps)), 0);

    const std::int64_t corr = delay_correction(stream.config);
    const std::vector<std::int64_t> stops = detector_times(stream, Detector::bob);
    std::size_t j = 0;
    for (const DetectionEvent& e : stream.events) {
        if (e.detector != Detector::alice) continue;
        if (!in_pulse_range(e, starts_from)) continue;
        ++hist.n_starts;
        const std::int64_t lo = e.time_ps + corr + t_min_ps;
        // Starts are visited in time order, so the stop cursor only moves
        // forward; it is not consumed, later starts may reuse a stop.
        while (j < stops.size() && stops[j] < lo) ++j;
        if (j < stops.size() && stops[j] < e.time_ps + corr + t_max_ps) {
            const std::int64_t dt = stops[j] - e.time_ps - corr;
            ++hist.counts[static_cast<std::size_t>((dt - t_min_ps) / bin_width_ps)];
        }
    }
    return hist;
}

std::vector<PeakWindow> bell_windows(const ExperimentConfig& config) {
    const std::int64_t hw = config.analysis.window_half_width_ps;
    const std::int64_t sep = config.bin_separation_ps;
    const std::int64_t period = config.pulse_period_ps;
    return {{-period, hw, "left_side"},
            {-sep, hw, "left_satellite"},
            {0, hw, "central"},
            {sep, hw, "right_satellite"},
            {period, hw, "right_side"}};
}

std::vector<PeakWindow> characterization_windows(const ExperimentConfig& config) {
    const std::int64_t hw = config.analysis.window_half_width_ps;
    const std::int64_t period = config.pulse_period_ps;
    return {{-period, hw, "left_side"}, {0, hw, "central"}, {period, hw, "right_side"}};
}

std::map<std::string, std::int64_t> count_windows(const TacHistogram& hist,
                                                  const std::vector<PeakWindow>& windows) {
    std::vector<std::pair<std::int64_t, std::int64_t>> spans;
    for (const PeakWindow& w : windows) {
        if (w.half_width_ps <= 0)
            throw std::invalid_argument("count_windows: window half width must be positive");
        const std::int64_t lo = w.center_ps - w.half_width_ps;
        const std::int64_t hi = w.center_ps + w.half_width_ps;
        if (lo < hist.t_min_ps || hi > hist.t_max_ps)
            throw std::invalid_argument("count_windows: window '" + w.label +
                                        "' lies outside the histogram range");
        spans.emplace_back(lo, hi);
    }
    std::vector<std::pair<std::int64_t, std::int64_t>> sorted = spans;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i].first < sorted[i - 1].second)
            throw std::invalid_argument("count_windows: windows overlap");

    std::map<std::string, std::int64_t> out;
    for (std::size_t wi = 0; wi < windows.size(); ++wi) {
        const auto [lo, hi] = spans[wi];
        const std::int64_t i_lo = ceil_div(lo - hist.t_min_ps, hist.bin_width_ps);
        const std::int64_t i_hi = ceil_div(hi - hist.t_min_ps, hist.bin_width_ps);
        std::int64_t sum = 0;
        for (std::int64_t i = i_lo; i < i_hi && i < static_cast<std::int64_t>(hist.n_bins()); ++i)
            if (i >= 0) sum += hist.counts[static_cast<std::size_t>(i)];
        out[windows[wi].label] += sum;
    }
    return out;
}

TripleCoincidenceCounts triple_coincidence_counts(const EventStream& stream,
                                                  const TripleCoincidenceOptions& options) {
    const ExperimentConfig& config = stream.config;
    if (!config.pump_interferometer || !config.analyzer_interferometers)
        throw std::invalid_argument(
            "triple_coincidence_counts: requires the Bell geometry (pump and analyzer "
            "interferometers enabled)");
    const std::int64_t period = config.pulse_period_ps;
    const std::int64_t sep = config.bin_separation_ps;
    const std::int64_t hw = config.analysis.window_half_width_ps;
    const std::int64_t acc_off = config.analysis.accidental_offset_ps;
    const std::int64_t corr = delay_correction(config);

    const std::vector<std::int64_t> stops = detector_times(stream, Detector::bob);
    TripleCoincidenceCounts out;
    for (const DetectionEvent& e : stream.events) {
        if (e.detector != Detector::alice) continue;
        if (!in_pulse_range(e, options.starts_from)) continue;
        if (options.postselect_central_bin) {
            const std::int64_t slot = ((e.time_ps - config.alice.detection_delay_ps) % period + period) % period;
            if (slot < sep - hw || slot >= sep + hw) continue;
        }
        ++out.n_starts;
        const std::int64_t t0 = e.time_ps + corr;
        if (any_in(stops, t0 - hw, t0 + hw)) ++out.interfering;
        if (any_in(stops, t0 + acc_off - hw, t0 + acc_off + hw)) ++out.accidental;
    }
    return out;
}

VisibilityFit fit_fringe(const FringeScan& scan) {
    if (scan.size() < 5)
        throw std::invalid_argument("fit_fringe: need at least 5 phase points for a well-posed fit");
    std::vector<double> x, raw, net, var_raw, var_net;
    double lo = scan.front().phase, hi = scan.front().phase;
    for (const FringePoint& p : scan) {
        x.push_back(p.phase);
        lo = std::min(lo, p.phase);
        hi = std::max(hi, p.phase);
        raw.push_back(static_cast<double>(p.triple_count));
        net.push_back(static_cast<double>(p.triple_count - p.accidental_count));
        var_raw.push_back(std::max<double>(static_cast<double>(p.triple_count), 1.0));
        var_net.push_back(
            std::max<double>(static_cast<double>(p.triple_count + p.accidental_count), 1.0));
    }
    if (hi - lo < 1.5 * kPi)
        throw std::invalid_argument("fit_fringe: phase points must span at least 1.5 pi");

    const HarmonicFit raw_fit = fit_harmonics(x, raw, var_raw);
    const HarmonicFit net_fit = fit_harmonics(x, net, var_net);

    VisibilityFit out;
    out.raw_v = visibility_of(raw_fit);
    out.net_v = visibility_of(net_fit);
    out.amplitude = net_fit.beta[0];
    out.phase_offset = std::atan2(-net_fit.beta[2], -net_fit.beta[1]);

    // Propagate the coefficient covariance through V = sqrt(b^2+c^2)/a.
    const double a = net_fit.beta[0];
    const double b = net_fit.beta[1];
    const double c = net_fit.beta[2];
    const double s = std::sqrt(b * b + c * c);
    std::array<double, 3> g{};
    if (s > 0.0) {
        g = {-s / (a * a), b / (a * s), c / (a * s)};
    } else {
        g = {0.0, 1.0 / a, 1.0 / a};
    }
    double var_v = 0.0;
    for (int r = 0; r < 3; ++r)
        for (int cidx = 0; cidx < 3; ++cidx) var_v += g[r] * net_fit.cov[r][cidx] * g[cidx];
    out.sigma_v = std::sqrt(std::max(var_v, 0.0));
    return out;
}

FringeScan scan_fringe(const ExperimentConfig& config) {
    ScanAccumulator acc;
    acc.want_tac = false;
    run_scan(config, acc);
    return std::move(acc.scan);
}

BellScanResult bell_scan(const ExperimentConfig& config) {
    ScanAccumulator acc;
    acc.want_tac = true;
    run_scan(config, acc);
    return {std::move(acc.scan), std::move(acc.tac)};
}

TacHistogram tac_over_run(const ExperimentConfig& config) {
    TacHistogram total;
    total.bin_width_ps = config.analysis.tac_bin_width_ps;
    total.t_min_ps = -config.analysis.tac_range_ps;
    total.t_max_ps = config.analysis.tac_range_ps;
    total.counts.assign(
        static_cast<std::size_t>(ceil_div(total.t_max_ps - total.t_min_ps, total.bin_width_ps)), 0);
    for_each_chunk(config, kScanChunkPulses, analysis_margin_pulses(config),
                   [&](const ChunkStream& chunk) {
                       total.add(build_tac_histogram(chunk.stream, total.bin_width_ps, total.t_min_ps,
                                                     total.t_max_ps,
                                                     PulseRange{chunk.core_first, chunk.core_count}));
                   });
    return total;
}

PowerScanResult power_scan_visibility(const std::vector<double>& mu_values,
                                      const std::vector<std::uint64_t>& pulses_per_point,
                                      const ExperimentConfig& base_config) {
    if (mu_values.empty()) throw std::invalid_argument("power_scan_visibility: no mu values");
    if (pulses_per_point.size() != 1 && pulses_per_point.size() != mu_values.size())
        throw std::invalid_argument(
            "power_scan_visibility: pulses_per_point must hold one entry or one per mu");

    PowerScanResult result;
    for (std::size_t i = 0; i < mu_values.size(); ++i) {
        ExperimentConfig cfg = base_config;
        cfg.mu = mu_values[i];
        cfg.n_pulses = pulses_per_point.size() == 1 ? pulses_per_point[0] : pulses_per_point[i];
        cfg.seed = sub_seed(base_config.seed, kPowerPointTag, i);
        const VisibilityFit fit = fit_fringe(scan_fringe(cfg));
        result.points.push_back({mu_values[i], fit.net_v, fit.sigma_v});
    }

    // Variance-weighted straight line through (mu, net_v).
    double S = 0, Sx = 0, Sy = 0, Sxx = 0, Sxy = 0;
    for (const PowerScanPoint& p : result.points) {
        const double w = p.sigma_v > 0.0 ? 1.0 / (p.sigma_v * p.sigma_v) : 1.0;
        S += w;
        Sx += w * p.mu;
        Sy += w * p.net_v;
        Sxx += w * p.mu * p.mu;
        Sxy += w * p.mu * p.net_v;
    }
    const double det = S * Sxx - Sx * Sx;
    if (std::abs(det) < 1e-30) throw std::runtime_error("power_scan_visibility: degenerate mu grid");
    result.fit.slope = (S * Sxy - Sx * Sy) / det;
    result.fit.intercept = (Sxx * Sy - Sx * Sxy) / det;
    result.fit.sigma_slope = std::sqrt(S / det);
    result.fit.sigma_intercept = std::sqrt(Sxx / det);
    return result;
}

std::uint64_t analysis_margin_pulses(const ExperimentConfig& config) {
    const std::int64_t period = config.pulse_period_ps;
    const std::int64_t span = config.analysis.tac_range_ps +
                              std::abs(delay_correction(config)) +
                              std::abs(config.analysis.accidental_offset_ps) +
                              config.analysis.window_half_width_ps + period;
    return static_cast<std::uint64_t>(span / period) + 2;
}

void write_tac_csv(std::ostream& out, const TacHistogram& hist, const ExperimentConfig& config) {
    out << "# timebin-lab tac-histogram v1\n";
    out << "# config " << to_json(config, -1) << "\n";
    out << "# n_starts " << hist.n_starts << "\n";
    out << "# bin_width_ps " << hist.bin_width_ps << "\n";
    out << "bin_center_ps,count\n";
    for (std::size_t i = 0; i < hist.n_bins(); ++i)
        out << hist.bin_center(i) << ',' << hist.counts[i] << '\n';
}

void write_fringe_csv(std::ostream& out, const FringeScan& scan, const ExperimentConfig& config) {
    out << "# timebin-lab fringe-scan v1\n";
    out << "# config " << to_json(config, -1) << "\n";
    if (!scan.empty()) out << "# n_pulses_per_point " << scan.front().n_pulses << "\n";
    out << "phase_rad,triple_count,accidental_count\n";
    for (const FringePoint& p : scan)
        out << fmt_g(p.phase) << ',' << p.triple_count << ',' << p.accidental_count << '\n';
}

void write_power_csv(std::ostream& out, const PowerScanResult& result, const ExperimentConfig& config) {
    out << "# timebin-lab power-scan v1\n";
    out << "# config " << to_json(config, -1) << "\n";
    out << "mu,net_v,sigma_v\n";
    for (const PowerScanPoint& p : result.points)
        out << fmt_g(p.mu) << ',' << fmt_g(p.net_v) << ',' << fmt_g(p.sigma_v) << '\n';
}

}  // namespace timebin
