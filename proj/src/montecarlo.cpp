#include "timebin/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>
#include <thread>

namespace timebin {

namespace {

// Ordering of merged events: time first, then detector, then photon before
// dark so that merging simultaneous clicks keeps the photon.
struct EventLess {
    bool operator()(const DetectionEvent& a, const DetectionEvent& b) const noexcept {
        if (a.time_ps != b.time_ps) return a.time_ps < b.time_ps;
        if (a.detector != b.detector) return a.detector < b.detector;
        if (a.origin != b.origin) return a.origin < b.origin;
        if (a.pulse_index != b.pulse_index) return a.pulse_index < b.pulse_index;
        return a.bin_index < b.bin_index;
    }
};

std::array<double, 36> to_cdf(const JointDistribution& dist) {
    std::array<double, 36> cdf{};
    double acc = 0.0;
    for (std::size_t i = 0; i < dist.p.size(); ++i) {
        acc += dist.p[i];
        cdf[i] = acc;
    }
    return cdf;
}

PairOutcome outcome_from_index(std::size_t i) {
    PairOutcome o;
    o.port_b = static_cast<Port>(i % 2);
    i /= 2;
    o.bin_b = static_cast<std::uint8_t>(i % kNumBins);
    i /= kNumBins;
    o.port_a = static_cast<Port>(i % 2);
    o.bin_a = static_cast<std::uint8_t>(i / 2);
    return o;
}

PairOutcome pick_from_cdf(const std::array<double, 36>& cdf, double u) {
    for (std::size_t i = 0; i < cdf.size(); ++i)
        if (u < cdf[i]) return outcome_from_index(i);
    return outcome_from_index(cdf.size() - 1);  // u landed on the rounding tail
}

// Mean dark candidates per pulse. Free-running rates are in Hz, gated
// rates in probability per ns; candidates outside an open gate are
// discarded later, which thins the process to the configured in-gate rate.
double dark_mean_per_pulse(const DetectorConfig& d, std::int64_t period_ps) {
    if (d.dark_rate <= 0.0) return 0.0;
    return d.gated ? d.dark_rate * static_cast<double>(period_ps) / 1000.0
                   : d.dark_rate * static_cast<double>(period_ps) * 1e-12;
}

void merge_simultaneous_clicks(std::vector<DetectionEvent>& events) {
    events.erase(std::unique(events.begin(), events.end(),
                             [](const DetectionEvent& a, const DetectionEvent& b) {
                                 return a.time_ps == b.time_ps && a.detector == b.detector;
                             }),
                 events.end());
}

void apply_dead_time(std::vector<DetectionEvent>& events, std::int64_t dead_time_ps) {
    if (dead_time_ps <= 0 || events.empty()) return;
    std::vector<DetectionEvent> kept;
    kept.reserve(events.size());
    std::int64_t last = std::numeric_limits<std::int64_t>::min() / 2;
    for (const DetectionEvent& e : events) {
        if (e.time_ps - last >= dead_time_ps || kept.empty()) {
            kept.push_back(e);
            last = e.time_ps;
        }
    }
    events.swap(kept);
}

// Keep only stop-detector events that fall inside a gate triggered by a
// start click. Gates all have the same width, so both their starts and
// ends are sorted and a single forward pointer suffices.
void apply_gating(std::vector<DetectionEvent>& events, const std::vector<std::int64_t>& trigger_times,
                  std::int64_t gate_offset_ps, std::int64_t gate_width_ps) {
    std::vector<DetectionEvent> kept;
    kept.reserve(events.size());
    std::size_t k = 0;
    for (const DetectionEvent& e : events) {
        while (k < trigger_times.size() && trigger_times[k] + gate_offset_ps + gate_width_ps <= e.time_ps)
            ++k;
        if (k < trigger_times.size() && trigger_times[k] + gate_offset_ps <= e.time_ps) kept.push_back(e);
    }
    events.swap(kept);
}

unsigned worker_threads(const ExperimentConfig& config) {
    if (config.chunk_count > 0) return static_cast<unsigned>(config.chunk_count);
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

}  // namespace

int sample_pairs_per_pulse(double mu, SplitMix64& rng) {
    if (!(mu >= 0.0 && mu < 0.5))
        throw std::invalid_argument("sample_pairs_per_pulse: mu must be in [0, 0.5)");
    return PoissonSampler(mu).sample(rng);
}

PairOutcome sample_pair_outcome(const JointDistribution& dist, SplitMix64& rng) {
    return pick_from_cdf(to_cdf(dist), rng.uniform());
}

OutcomeSampler::OutcomeSampler(const PhaseSetting& phases, double intrinsic_visibility,
                               bool pump_interferometer, bool analyzer_interferometers)
    : intrinsic_v_(intrinsic_visibility) {
    if (!(intrinsic_visibility >= 0.0 && intrinsic_visibility <= 1.0))
        throw std::invalid_argument("OutcomeSampler: intrinsic visibility must be in [0, 1]");
    cdf_ = to_cdf(joint_detection_distribution(phases, pump_interferometer, analyzer_interferometers));
    // Every entry of the joint table depends on the phases only through
    // cos(theta), so shifting the pump phase by pi and averaging removes
    // the interference term exactly.
    PhaseSetting flipped = phases;
    flipped.pump += kPi;
    JointDistribution averaged =
        joint_detection_distribution(phases, pump_interferometer, analyzer_interferometers);
    const JointDistribution other =
        joint_detection_distribution(flipped, pump_interferometer, analyzer_interferometers);
    for (std::size_t i = 0; i < averaged.p.size(); ++i)
        averaged.p[i] = 0.5 * (averaged.p[i] + other.p[i]);
    cdf_averaged_ = to_cdf(averaged);
}

PairOutcome OutcomeSampler::sample(SplitMix64& rng) const {
    if (intrinsic_v_ < 1.0 && !rng.bernoulli(intrinsic_v_))
        return pick_from_cdf(cdf_averaged_, rng.uniform());
    return pick_from_cdf(cdf_, rng.uniform());
}

std::vector<PulsePairOutcome> sample_outcome_range(const ExperimentConfig& config, std::uint64_t first,
                                                   std::uint64_t count,
                                                   std::vector<std::uint8_t>* pair_counts) {
    const OutcomeSampler sampler(config.phases, config.intrinsic_visibility, config.pump_interferometer,
                                 config.analyzer_interferometers);
    const PoissonSampler pair_number(config.mu);
    std::vector<PulsePairOutcome> out;
    const double expected = static_cast<double>(count) * std::max(config.mu, 0.01) * 1.25 + 16.0;
    out.reserve(static_cast<std::size_t>(std::min(expected, 1.6e7)));
    if (pair_counts) {
        pair_counts->clear();
        pair_counts->reserve(count);
    }
    for (std::uint64_t p = first; p < first + count; ++p) {
        SplitMix64 rng = pulse_stream(config.seed, p, StreamSalt::pair_sampling);
        const int n = config.exactly_one_pair ? 1 : pair_number.sample(rng);
        if (pair_counts)
            pair_counts->push_back(static_cast<std::uint8_t>(std::min(n, 255)));
        for (int k = 0; k < n; ++k) out.push_back({p, sampler.sample(rng)});
    }
    return out;
}

std::uint64_t gating_reach_pulses(const ExperimentConfig& config) {
    const std::int64_t period = config.pulse_period_ps;
    const double jitter_margin = 10.0 * (config.alice.jitter_sigma_ps + config.bob.jitter_sigma_ps);
    std::int64_t span = config.bob.gate_offset_ps + config.bob.gate_width_ps +
                        config.bob.detection_delay_ps + config.alice.detection_delay_ps +
                        2 * config.bin_separation_ps + period +
                        static_cast<std::int64_t>(jitter_margin);
    if (span < period) span = period;
    return static_cast<std::uint64_t>(span / period) + 2;
}

EventStream apply_channel_and_detectors(const std::vector<PulsePairOutcome>& outcomes,
                                        const ExperimentConfig& config, std::uint64_t first,
                                        std::uint64_t count) {
    const std::int64_t period = config.pulse_period_ps;
    const std::int64_t sep = config.bin_separation_ps;
    const double filter_a = config.alice.channel.filter_pass;
    const double filter_b = config.bob.channel.filter_pass;
    const double filter_b_twin = config.bob.channel.filter_pass_given_twin;
    const double loss_a = config.alice.channel.transmission * config.alice.channel.efficiency;
    const double loss_b = config.bob.channel.transmission * config.bob.channel.efficiency;
    const double dark_mean_a = dark_mean_per_pulse(config.alice, period);
    const double dark_mean_b = dark_mean_per_pulse(config.bob, period);
    const PoissonSampler dark_a(dark_mean_a);
    const PoissonSampler dark_b(dark_mean_b);
    const bool jitter_a = config.alice.jitter_sigma_ps > 0.0;
    const bool jitter_b = config.bob.jitter_sigma_ps > 0.0;

    std::vector<DetectionEvent> alice;
    std::vector<DetectionEvent> bob;
    alice.reserve(outcomes.size() / 4 + 16);
    bob.reserve(outcomes.size() / 4 + 16);

    std::size_t oi = 0;
    while (oi < outcomes.size() && outcomes[oi].pulse_index < first) ++oi;

    for (std::uint64_t p = first; p < first + count; ++p) {
        if (oi < outcomes.size() && outcomes[oi].pulse_index == p) {
            SplitMix64 rng = pulse_stream(config.seed, p, StreamSalt::channel);
            const std::int64_t pulse_start = static_cast<std::int64_t>(p) * period;
            do {
                const PairOutcome& o = outcomes[oi].outcome;
                // Filter passes are sampled for both photons regardless of
                // the later loss draws: the stop photon's pass probability
                // is conditioned on its twin's filter outcome, not on the
                // twin being detected.
                const bool pass_a = rng.bernoulli(filter_a);
                const bool pass_b = rng.bernoulli(pass_a ? filter_b_twin : filter_b);
                const bool survive_a = rng.bernoulli(loss_a);
                const bool survive_b = rng.bernoulli(loss_b);
                if (pass_a && survive_a && o.port_a == Port::minus) {
                    std::int64_t t = pulse_start + o.bin_a * sep + config.alice.detection_delay_ps;
                    if (jitter_a)
                        t += std::llround(rng.gaussian() * config.alice.jitter_sigma_ps);
                    alice.push_back({t, Detector::alice, Origin::photon, p, o.bin_a});
                }
                if (pass_b && survive_b && o.port_b == Port::minus) {
                    std::int64_t t = pulse_start + o.bin_b * sep + config.bob.detection_delay_ps;
                    if (jitter_b)
                        t += std::llround(rng.gaussian() * config.bob.jitter_sigma_ps);
                    bob.push_back({t, Detector::bob, Origin::photon, p, o.bin_b});
                }
                ++oi;
            } while (oi < outcomes.size() && outcomes[oi].pulse_index == p);
        }
        if (dark_mean_a > 0.0 || dark_mean_b > 0.0) {
            SplitMix64 rng = pulse_stream(config.seed, p, StreamSalt::dark_counts);
            const std::int64_t pulse_start = static_cast<std::int64_t>(p) * period;
            if (dark_mean_a > 0.0) {
                const int n = dark_a.sample(rng);
                for (int k = 0; k < n; ++k)
                    alice.push_back({pulse_start + rng.below(period), Detector::alice, Origin::dark, p, -1});
            }
            if (dark_mean_b > 0.0) {
                const int n = dark_b.sample(rng);
                for (int k = 0; k < n; ++k)
                    bob.push_back({pulse_start + rng.below(period), Detector::bob, Origin::dark, p, -1});
            }
        }
    }

    std::sort(alice.begin(), alice.end(), EventLess{});
    merge_simultaneous_clicks(alice);
    apply_dead_time(alice, config.alice.dead_time_ps);

    std::sort(bob.begin(), bob.end(), EventLess{});
    if (config.bob.gated) {
        std::vector<std::int64_t> triggers;
        triggers.reserve(alice.size());
        for (const DetectionEvent& e : alice) triggers.push_back(e.time_ps);
        apply_gating(bob, triggers, config.bob.gate_offset_ps, config.bob.gate_width_ps);
    }
    merge_simultaneous_clicks(bob);
    apply_dead_time(bob, config.bob.dead_time_ps);

    EventStream stream;
    stream.config = config;
    stream.events.resize(alice.size() + bob.size());
    std::merge(alice.begin(), alice.end(), bob.begin(), bob.end(), stream.events.begin(), EventLess{});
    return stream;
}

ChunkStream simulate_chunk(const ExperimentConfig& config, std::uint64_t first, std::uint64_t count,
                           std::uint64_t margin_keep) {
    if (first > config.n_pulses) first = config.n_pulses;
    count = std::min<std::uint64_t>(count, config.n_pulses - first);
    const std::uint64_t reach = gating_reach_pulses(config);
    const std::uint64_t lo = first > margin_keep + reach ? first - margin_keep - reach : 0;
    const std::uint64_t hi = std::min<std::uint64_t>(config.n_pulses, first + count + margin_keep + reach);
    const std::uint64_t keep_lo = first > margin_keep ? first - margin_keep : 0;
    const std::uint64_t keep_hi = std::min<std::uint64_t>(config.n_pulses, first + count + margin_keep);

    std::vector<std::uint8_t> counts_ext;
    const auto outcomes = sample_outcome_range(config, lo, hi - lo, &counts_ext);

    ChunkStream chunk;
    chunk.core_first = first;
    chunk.core_count = count;
    chunk.margin_kept = margin_keep;
    chunk.stream = apply_channel_and_detectors(outcomes, config, lo, hi - lo);

    auto& events = chunk.stream.events;
    events.erase(std::remove_if(events.begin(), events.end(),
                                [&](const DetectionEvent& e) {
                                    return e.pulse_index < keep_lo || e.pulse_index >= keep_hi;
                                }),
                 events.end());

    chunk.stream.pair_counts.assign(counts_ext.begin() + static_cast<std::ptrdiff_t>(first - lo),
                                    counts_ext.begin() + static_cast<std::ptrdiff_t>(first - lo + count));
    chunk.stream.total_pairs = 0;
    for (std::uint8_t c : chunk.stream.pair_counts) chunk.stream.total_pairs += c;
    return chunk;
}

void for_each_chunk(const ExperimentConfig& config, std::uint64_t chunk_pulses,
                    std::uint64_t margin_keep, const std::function<void(const ChunkStream&)>& fn) {
    require_valid(config);
    if (config.n_pulses == 0) return;
    // Dead time makes clicks depend on the full detector history, which a
    // chunk boundary would cut; fall back to one chunk in that case.
    if (config.alice.dead_time_ps > 0 || config.bob.dead_time_ps > 0 || chunk_pulses == 0 ||
        chunk_pulses >= config.n_pulses) {
        fn(simulate_chunk(config, 0, config.n_pulses, margin_keep));
        return;
    }
    const unsigned threads = worker_threads(config);
    const std::uint64_t n_chunks = (config.n_pulses + chunk_pulses - 1) / chunk_pulses;
    std::uint64_t next = 0;
    while (next < n_chunks) {
        const std::uint64_t wave = std::min<std::uint64_t>(threads, n_chunks - next);
        std::vector<std::future<ChunkStream>> inflight;
        inflight.reserve(wave);
        for (std::uint64_t w = 0; w < wave; ++w) {
            const std::uint64_t first = (next + w) * chunk_pulses;
            const std::uint64_t count = std::min<std::uint64_t>(chunk_pulses, config.n_pulses - first);
            inflight.push_back(std::async(std::launch::async, simulate_chunk, config, first, count,
                                          margin_keep));
        }
        for (auto& f : inflight) fn(f.get());
        next += wave;
    }
}

EventStream simulate_run(const ExperimentConfig& config) {
    require_valid(config);
    EventStream out;
    out.config = config;
    if (config.n_pulses == 0) return out;

    const unsigned n_chunks = std::max(1u, worker_threads(config));
    const std::uint64_t chunk_pulses = (config.n_pulses + n_chunks - 1) / n_chunks;
    out.pair_counts.reserve(config.n_pulses);
    for_each_chunk(config, chunk_pulses, 0, [&](const ChunkStream& chunk) {
        out.events.insert(out.events.end(), chunk.stream.events.begin(), chunk.stream.events.end());
        out.pair_counts.insert(out.pair_counts.end(), chunk.stream.pair_counts.begin(),
                               chunk.stream.pair_counts.end());
        out.total_pairs += chunk.stream.total_pairs;
    });
    // Chunks are internally time ordered but detection delays let late
    // events of one chunk overlap the next chunk's range.
    std::sort(out.events.begin(), out.events.end(), EventLess{});
    return out;
}

}  // namespace timebin
