// Turns event streams into measured quantities: start-stop time histograms,
// window counts, postselected triple coincidences, fringe fits, and
// visibility-versus-pump-power scans.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "timebin/config.hpp"
#include "timebin/events.hpp"

namespace timebin {

// Histogram of stop-minus-start time differences. Bins are half open,
// [low, high) in ps; bin i covers [t_min + i*w, t_min + (i+1)*w). Start
// times come from the start detector, the recorded stop is the first stop
// event inside the range; the fixed start/stop detection delay difference
// is subtracted so peaks appear at the optical delays.
struct TacHistogram {
    std::int64_t bin_width_ps = 50;
    std::int64_t t_min_ps = 0;
    std::int64_t t_max_ps = 0;
    std::vector<std::int64_t> counts;
    std::uint64_t n_starts = 0;

    std::size_t n_bins() const noexcept { return counts.size(); }
    std::int64_t bin_low(std::size_t i) const noexcept {
        return t_min_ps + static_cast<std::int64_t>(i) * bin_width_ps;
    }
    std::int64_t bin_center(std::size_t i) const noexcept { return bin_low(i) + bin_width_ps / 2; }
    std::int64_t total() const noexcept;

    // Accumulates another histogram with identical geometry.
    void add(const TacHistogram& other);
};

// Pulse range whose starts are counted; stops may come from anywhere in
// the stream. Used when analyzing chunk streams that carry margin events.
struct PulseRange {
    std::uint64_t first = 0;
    std::uint64_t count = 0;
};

TacHistogram build_tac_histogram(const EventStream& stream, std::int64_t bin_width_ps,
                                 std::int64_t t_min_ps, std::int64_t t_max_ps,
                                 std::optional<PulseRange> starts_from = std::nullopt);

struct PeakWindow {
    std::int64_t center_ps = 0;
    std::int64_t half_width_ps = 0;
    std::string label;
};

// Standard window sets for the two geometries.
std::vector<PeakWindow> bell_windows(const ExperimentConfig& config);
std::vector<PeakWindow> characterization_windows(const ExperimentConfig& config);

// Sums histogram bins per labeled window (a bin belongs to a window when
// its low edge does). Windows must be pairwise disjoint and inside the
// histogram range; violations throw std::invalid_argument.
std::map<std::string, std::int64_t> count_windows(const TacHistogram& hist,
                                                  const std::vector<PeakWindow>& windows);

struct TripleCoincidenceCounts {
    std::int64_t interfering = 0;  // stops in the central window
    std::int64_t accidental = 0;   // stops in the noise-estimation window
    std::uint64_t n_starts = 0;    // starts entering the count
};

struct TripleCoincidenceOptions {
    bool postselect_central_bin = true;  // keep only starts in the bin-1 slot
    std::optional<PulseRange> starts_from;
};

// Counts start-stop coincidences in the central window, postselected on
// starts whose arrival sits in the middle time-bin slot of their pulse.
// The accidental estimate applies the same window at
// analysis.accidental_offset_ps, a slot that contains no photons, so it
// measures the dark-count-driven background. Requires the Bell geometry.
TripleCoincidenceCounts triple_coincidence_counts(const EventStream& stream,
                                                  const TripleCoincidenceOptions& options = {});

struct FringePoint {
    double phase = 0.0;  // value of the scanned interferometer phase
    std::int64_t triple_count = 0;
    std::int64_t accidental_count = 0;
    std::uint64_t n_pulses = 0;
};

using FringeScan = std::vector<FringePoint>;

struct VisibilityFit {
    double raw_v = 0.0;
    double net_v = 0.0;
    double phase_offset = 0.0;  // radians
    double amplitude = 0.0;     // mean counts per point of the net fringe
    double sigma_v = 0.0;       // standard deviation of net_v
};

// Weighted least squares fit of counts to A (1 - V cos(phase - offset)),
// linearized on the (1, cos, sin) basis. raw_v fits the triple counts,
// net_v the accidental-subtracted counts; sigma_v comes from the fit
// covariance with Poisson weights. Throws std::invalid_argument for an
// ill-posed scan (fewer than 5 points or under 1.5 pi of phase span) and
// std::runtime_error when the fit degenerates.
VisibilityFit fit_fringe(const FringeScan& scan);

// Runs the configured phase scan: for each grid point the scan variable is
// set, config.n_pulses pulses are simulated in chunks, and the triple and
// accidental counts are accumulated. Each point uses a sub-seed derived
// from (seed, point index).
FringeScan scan_fringe(const ExperimentConfig& config);

// Whole-run start-stop histogram, accumulated chunk by chunk.
TacHistogram tac_over_run(const ExperimentConfig& config);

// Fringe scan plus accumulated histogram in one pass over the same events.
struct BellScanResult {
    FringeScan scan;
    TacHistogram tac;
};
BellScanResult bell_scan(const ExperimentConfig& config);

struct PowerScanPoint {
    double mu = 0.0;
    double net_v = 0.0;
    double sigma_v = 0.0;
};

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double sigma_slope = 0.0;
    double sigma_intercept = 0.0;
};

struct PowerScanResult {
    std::vector<PowerScanPoint> points;
    LinearFit fit;
};

// One fringe scan and fit per mu value; pulses_per_point holds one entry
// per mu or a single entry for all. The linear fit of net visibility
// against mu is weighted by the per-point variances.
PowerScanResult power_scan_visibility(const std::vector<double>& mu_values,
                                      const std::vector<std::uint64_t>& pulses_per_point,
                                      const ExperimentConfig& base_config);

// Margin (in pulses) a chunk needs so that every analysis window around a
// core start is fully populated.
std::uint64_t analysis_margin_pulses(const ExperimentConfig& config);

// Plot-ready CSV exports with '#' metadata headers echoing the config.
void write_tac_csv(std::ostream& out, const TacHistogram& hist, const ExperimentConfig& config);
void write_fringe_csv(std::ostream& out, const FringeScan& scan, const ExperimentConfig& config);
void write_power_csv(std::ostream& out, const PowerScanResult& result, const ExperimentConfig& config);

}  // namespace timebin
