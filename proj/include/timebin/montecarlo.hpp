// Monte Carlo engine: simulates the optical chain pulse by pulse and emits
// time-stamped detection events.
//
// Determinism contract: every pulse draws from generators derived from
// (seed, pulse index) only, so an identical configuration reproduces the
// identical event stream bit for bit, for any chunk partition and any
// number of worker threads. Chunks are generated with enough margin pulses
// that gating, which couples the stop detector to start clicks from
// neighboring pulses, sees the same trigger set as an unchunked run.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "timebin/analytic.hpp"
#include "timebin/config.hpp"
#include "timebin/events.hpp"
#include "timebin/rng.hpp"

namespace timebin {

// Quantum outcome of one pair: time bin and analyzer port per photon.
struct PairOutcome {
    std::uint8_t bin_a = 0;
    Port port_a = Port::minus;
    std::uint8_t bin_b = 0;
    Port port_b = Port::minus;

    bool operator==(const PairOutcome&) const = default;
};

struct PulsePairOutcome {
    std::uint64_t pulse_index = 0;
    PairOutcome outcome;
};

// Poisson sample of the pair number for one pulse. mu must be in [0, 0.5).
int sample_pairs_per_pulse(double mu, SplitMix64& rng);

// One outcome drawn from a prebuilt joint table.
PairOutcome sample_pair_outcome(const JointDistribution& dist, SplitMix64& rng);

// Mixture sampler used by the engine: with probability intrinsic_visibility
// the outcome is drawn from the joint table at the configured phases, and
// otherwise from the phase-averaged table. The mean coincidence rate then
// carries the fringe term V_max cos(theta), which models the finite
// interferometer quality.
class OutcomeSampler {
  public:
    OutcomeSampler(const PhaseSetting& phases, double intrinsic_visibility, bool pump_interferometer,
                   bool analyzer_interferometers);

    PairOutcome sample(SplitMix64& rng) const;

  private:
    std::array<double, 36> cdf_{};
    std::array<double, 36> cdf_averaged_{};
    double intrinsic_v_ = 1.0;
};

// Pair outcomes for the pulse range [first, first + count), sampled with
// the per-pulse generators. pair_counts receives one entry per pulse.
std::vector<PulsePairOutcome> sample_outcome_range(const ExperimentConfig& config,
                                                   std::uint64_t first, std::uint64_t count,
                                                   std::vector<std::uint8_t>* pair_counts = nullptr);

// Applies the detection chain to sampled outcomes for [first, first+count):
// spectral filters (twin-correlated), transmission and quantum efficiency,
// detector delays, dark counts, gating of the stop detector off start
// clicks, merging of simultaneous clicks, and dead time. Events whose gate
// trigger could lie outside the supplied range are still gated correctly
// as long as outcomes cover gating_reach_pulses(config) beyond it; callers
// that need exact edges should use simulate_chunk.
EventStream apply_channel_and_detectors(const std::vector<PulsePairOutcome>& outcomes,
                                        const ExperimentConfig& config, std::uint64_t first,
                                        std::uint64_t count);

// Number of neighbor pulses whose start clicks can gate events of a given
// pulse (and the largest window any analysis may look across).
std::uint64_t gating_reach_pulses(const ExperimentConfig& config);

// One deterministic chunk of a run. The event list covers
// [core_first - margin_kept, core_first + core_count + margin_kept)
// clamped to the run, so window searches near the core edges see their
// neighbors; counts and statistics must be taken from core pulses only.
struct ChunkStream {
    EventStream stream;
    std::uint64_t core_first = 0;
    std::uint64_t core_count = 0;
    std::uint64_t margin_kept = 0;
};

// Simulates pulses [first, first + count) with margin_keep extra pulses of
// context on both sides.
ChunkStream simulate_chunk(const ExperimentConfig& config, std::uint64_t first, std::uint64_t count,
                           std::uint64_t margin_keep);

// Visits the whole run as consecutive chunks (delivered in order) of
// roughly chunk_pulses pulses, generating them with config.chunk_count
// worker threads. Chunk boundaries and thread count cannot change any
// event.
void for_each_chunk(const ExperimentConfig& config, std::uint64_t chunk_pulses,
                    std::uint64_t margin_keep, const std::function<void(const ChunkStream&)>& fn);

// Full run, materialized. Validates the configuration first and throws
// std::invalid_argument naming the offending field.
EventStream simulate_run(const ExperimentConfig& config);

}  // namespace timebin
