#include "timebin/pair_statistics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace timebin {

namespace {

void check_channel(const ChannelParams& ch, const char* where) {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(ch.transmission) || !in_unit(ch.efficiency) || !in_unit(ch.filter_pass) ||
        !in_unit(ch.filter_pass_given_twin))
        throw std::invalid_argument(std::string(where) + ": channel parameters must be in [0, 1]");
}

}  // namespace

PairNumberDistribution PairNumberDistribution::poisson(double mean, int n_max) {
    if (!(mean >= 0.0)) throw std::invalid_argument("PairNumberDistribution: mean must be non-negative");
    if (n_max < 0) throw std::invalid_argument("PairNumberDistribution: n_max must be non-negative");
    PairNumberDistribution dist;
    dist.mean = mean;
    dist.probabilities.resize(static_cast<std::size_t>(n_max) + 1);
    double term = std::exp(-mean);
    for (int n = 0; n <= n_max; ++n) {
        dist.probabilities[static_cast<std::size_t>(n)] = term;
        term *= mean / (n + 1);
    }
    return dist;
}

void PairNumberDistribution::validate() const {
    double sum = 0.0;
    for (double p : probabilities) {
        if (p < 0.0) throw std::invalid_argument("PairNumberDistribution: negative probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("PairNumberDistribution: probabilities must sum to 1");
}

double p_start_given_n(int n, const ChannelParams& start_side) {
    if (n < 0) throw std::invalid_argument("p_start_given_n: n must be non-negative");
    check_channel(start_side, "p_start_given_n");
    return 1.0 - std::pow(1.0 - start_side.detect_prob(), n);
}

double p_stop_same_pulse_given_n(int n, const ChannelParams& stop_side) {
    if (n < 0) throw std::invalid_argument("p_stop_same_pulse_given_n: n must be non-negative");
    check_channel(stop_side, "p_stop_same_pulse_given_n");
    return 1.0 - std::pow(1.0 - stop_side.detect_prob_given_twin(), n);
}

double p_stop_next_pulse(const PairNumberDistribution& dist, const ChannelParams& stop_side) {
    check_channel(stop_side, "p_stop_next_pulse");
    const double q = stop_side.detect_prob();
    double sum = 0.0;
    double survive = 1.0;  // (1 - q)^m
    for (double pm : dist.probabilities) {
        sum += pm * (1.0 - survive);
        survive *= 1.0 - q;
    }
    return sum;
}

double main_side_ratio(double p_pair, const ChannelParams& stop_side) {
    if (!(p_pair > 0.0 && p_pair < 1.0))
        throw std::invalid_argument("main_side_ratio: p_pair must be in (0, 1)");
    check_channel(stop_side, "main_side_ratio");
    const double q_twin = stop_side.detect_prob_given_twin();
    const double denom = p_pair * (1.0 - q_twin) * stop_side.filter_pass;
    if (denom <= 0.0) throw std::invalid_argument("main_side_ratio: side peak probability vanishes");
    return stop_side.filter_pass_given_twin / denom;
}

PpairEstimate estimate_ppair_sidepeak(std::uint64_t main_counts, std::uint64_t side_counts) {
    if (main_counts == 0) throw std::invalid_argument("estimate_ppair_sidepeak: main_counts must be positive");
    PpairEstimate est;
    est.method = PpairMethod::side_peak;
    est.value = static_cast<double>(side_counts) / static_cast<double>(main_counts);
    est.relative_uncertainty =
        side_counts == 0 ? std::numeric_limits<double>::infinity()
                         : std::sqrt(1.0 / static_cast<double>(side_counts) +
                                     1.0 / static_cast<double>(main_counts));
    return est;
}

PpairEstimate estimate_ppair_sidepeak(std::uint64_t main_counts, std::uint64_t side_counts,
                                      const ChannelParams& stop_side) {
    check_channel(stop_side, "estimate_ppair_sidepeak");
    PpairEstimate est = estimate_ppair_sidepeak(main_counts, side_counts);
    const double bias = (1.0 - stop_side.detect_prob_given_twin()) * stop_side.filter_pass /
                        stop_side.filter_pass_given_twin;
    if (bias <= 0.0) throw std::invalid_argument("estimate_ppair_sidepeak: bias factor vanishes");
    est.value /= bias;
    return est;
}

PpairEstimate estimate_ppair_standard(double singles_rate_hz, const Uncertain& transmission,
                                      const Uncertain& efficiency, double pulse_rate_hz) {
    if (!(singles_rate_hz >= 0.0))
        throw std::invalid_argument("estimate_ppair_standard: singles rate must be non-negative");
    const double denom = transmission.value * efficiency.value * pulse_rate_hz;
    if (!(denom > 0.0))
        throw std::invalid_argument("estimate_ppair_standard: t, eta and pulse rate must be positive");
    PpairEstimate est;
    est.method = PpairMethod::standard;
    est.value = singles_rate_hz / denom;
    const double rt = transmission.relative();
    const double re = efficiency.relative();
    est.relative_uncertainty = std::sqrt(rt * rt + re * re);
    return est;
}

}  // namespace timebin
