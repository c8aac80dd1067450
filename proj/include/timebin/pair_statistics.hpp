// Start/stop statistics of a pulsed pair source measured with one detector
// per side and a start-stop time converter: conditional click
// probabilities, the main-to-side peak ratio, and the two estimators of
// the pair probability per pulse with their uncertainties.
#pragma once

#include <cstdint>
#include <vector>

namespace timebin {

// Per-side optical chain. filter_pass is the probability that a created
// photon passes the side's spectral filter; filter_pass_given_twin is the
// same probability conditioned on the twin photon having passed the other
// side's filter (1 when this side's filter is at least as wide, or absent).
struct ChannelParams {
    double transmission = 1.0;
    double efficiency = 1.0;
    double filter_pass = 1.0;
    double filter_pass_given_twin = 1.0;

    // Detection probability of a created photon on this side.
    double detect_prob() const noexcept { return filter_pass * transmission * efficiency; }
    // Same, conditioned on the twin having passed the other side's filter.
    double detect_prob_given_twin() const noexcept {
        return filter_pass_given_twin * transmission * efficiency;
    }

    bool operator==(const ChannelParams&) const = default;
};

// Number of pairs emitted per pulse. probabilities[n] = P(N = n).
struct PairNumberDistribution {
    std::vector<double> probabilities;
    double mean = 0.0;

    // Poisson distribution truncated at n_max. The omitted tail is below
    // 1e-15 for mean <= 0.5 and n_max = 20.
    static PairNumberDistribution poisson(double mean, int n_max = 20);

    // Throws std::invalid_argument if probabilities are negative or do not
    // sum to 1 within 1e-12.
    void validate() const;
};

// P(start | N pairs) = 1 - (1 - q_A)^N with q_A the start-side detection
// probability.
double p_start_given_n(int n, const ChannelParams& start_side);

// P(stop from the same pulse | N pairs), twin-conditioned filter pass.
double p_stop_same_pulse_given_n(int n, const ChannelParams& stop_side);

// Probability that the first pulse after the start produces a stop. Uses
// the unconditional filter pass: no twin constraint applies across pulses.
double p_stop_next_pulse(const PairNumberDistribution& dist, const ChannelParams& stop_side);

// Main-to-side peak ratio under the P(N > 1) = 0 truncation:
//   P(filter_B | filter_A) / [p_pair (1 - P(filter_B | filter_A) t_B eta_B) P(filter_B)].
// Independent of the start side's parameters, which cancel. p_pair must be
// in (0, 1).
double main_side_ratio(double p_pair, const ChannelParams& stop_side);

enum class PpairMethod { side_peak, standard };

struct PpairEstimate {
    double value = 0.0;
    double relative_uncertainty = 0.0;  // infinity when the side peak is empty
    PpairMethod method = PpairMethod::side_peak;
};

// Raw side/main count ratio. Counting statistics give the relative
// uncertainty sqrt(1/side + 1/main); an empty side peak yields value 0
// with unbounded uncertainty. main_counts must be positive.
PpairEstimate estimate_ppair_sidepeak(std::uint64_t main_counts, std::uint64_t side_counts);

// Same, corrected for the finite stop detection probability and filters:
// the raw ratio underestimates p_pair by
// (1 - P(filter_B | filter_A) t_B eta_B) P(filter_B) / P(filter_B | filter_A).
PpairEstimate estimate_ppair_sidepeak(std::uint64_t main_counts, std::uint64_t side_counts,
                                      const ChannelParams& stop_side);

struct Uncertain {
    double value = 0.0;
    double sigma = 0.0;

    double relative() const noexcept { return value != 0.0 ? sigma / value : 0.0; }
};

// p_pair = singles_rate / (t eta f); the relative uncertainty combines the
// supplied uncertainties on t and eta in quadrature.
PpairEstimate estimate_ppair_standard(double singles_rate_hz, const Uncertain& transmission,
                                      const Uncertain& efficiency, double pulse_rate_hz);

}  // namespace timebin
