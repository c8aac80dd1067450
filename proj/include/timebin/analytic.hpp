// Closed-form model of pulsed time-bin entanglement behind an unbalanced
// pump interferometer and two analyzer interferometers.
//
// Time bins are indexed 0..2: a photon occupies bin b after passing b long
// arms in total (pump plus analyzer). Each analyzer has two output ports,
// labelled minus (the monitored detector) and plus. All amplitudes use the
// convention: transmit 1/2, reflect i/2 per interferometer pass, with the
// long arm contributing a factor -e^{i phase} (minus port) or
// +i e^{i phase} (plus port) relative to the short arm.
#pragma once

#include <array>
#include <complex>
#include <cstddef>

namespace timebin {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr int kNumBins = 3;

enum class Port : int { minus = 0, plus = 1 };

// Relative phases of the three interferometers. theta = alpha + beta - phi
// is the only combination the coincidence rate depends on.
struct PhaseSetting {
    double pump = 0.0;   // phi
    double alice = 0.0;  // alpha
    double bob = 0.0;    // beta

    double theta() const noexcept { return alice + bob - pump; }

    bool operator==(const PhaseSetting&) const = default;
};

// Reduce an angle to (-pi, pi]. Display helper only; internal math keeps
// phases unreduced.
double wrap_angle(double angle) noexcept;

// Single photon over the three time bins, before an analyzer (no port
// structure yet).
struct TimeBinAmplitudes {
    std::array<std::complex<double>, kNumBins> bins{};

    double norm_squared() const noexcept;
};

// Single photon over (bin, port) after an analyzer.
struct PortAmplitudes {
    std::array<std::complex<double>, 2 * kNumBins> amps{};

    static constexpr std::size_t index(int bin, Port port) noexcept {
        return static_cast<std::size_t>(bin) * 2 + static_cast<std::size_t>(port);
    }
    std::complex<double>& at(int bin, Port port) noexcept { return amps[index(bin, port)]; }
    const std::complex<double>& at(int bin, Port port) const noexcept { return amps[index(bin, port)]; }

    double norm_squared() const noexcept;
};

// Joint detection probabilities over (bin_a, port_a, bin_b, port_b).
struct JointDistribution {
    std::array<double, 36> p{};

    static constexpr std::size_t index(int bin_a, Port port_a, int bin_b, Port port_b) noexcept {
        return ((static_cast<std::size_t>(bin_a) * 2 + static_cast<std::size_t>(port_a)) * kNumBins +
                static_cast<std::size_t>(bin_b)) *
                   2 +
               static_cast<std::size_t>(port_b);
    }
    double at(int bin_a, Port port_a, int bin_b, Port port_b) const noexcept {
        return p[index(bin_a, port_a, bin_b, port_b)];
    }

    double sum() const noexcept;
};

// Photon state after the pump interferometer:
// (|bin 0> - e^{i phi} |bin 1>) / sqrt(2).
// Throws std::invalid_argument for non-finite phi.
TimeBinAmplitudes pump_state(double phi);

// One analyzer pass. Input must be a single-photon state confined to bins
// {0, 1}; amplitude in bin 2 would leave the three-bin model and throws
// std::invalid_argument. Output is normalized iff the input is.
PortAmplitudes analyzer_transform(const TimeBinAmplitudes& state, double phase);

// Full 36-entry joint outcome table for one photon pair. The flags select
// the geometry: with the pump interferometer disabled the pair is created
// in bin 0 only; with the analyzers disabled each photon goes straight to
// the minus port of its detector in its creation bin.
JointDistribution joint_detection_distribution(const PhaseSetting& phases,
                                               bool pump_interferometer = true,
                                               bool analyzer_interferometers = true);

// Relative triple coincidence rate 1 - v cos(theta). v must be in [0, 1].
double triple_coincidence_rate(double theta, double visibility);

// Two-photon visibility under multi-pair emission, truncated at the
// four-photon term. rate_const_coeff and rate_cos_coeff are the
// coefficients of the relative coincidence rate
//   R_c = (const + cos * cos(theta)) / 2.
struct VisibilityPrediction {
    double p_pair = 0.0;
    double v_exact = 1.0;       // (1 + p) / (1 + 2p)
    double v_linear = 1.0;      // 1 - p
    double intrinsic_v = 1.0;   // interferometer quality ceiling
    double rate_const_coeff = 0.0;  // p + 2 p^2
    double rate_cos_coeff = 0.0;    // p + p^2

    // Fringe visibility including the instrument ceiling.
    double total_visibility() const noexcept { return intrinsic_v * v_exact; }
};

// p_pair must be in [0, 0.5); intrinsic_v in [0, 1].
VisibilityPrediction multiphoton_visibility(double p_pair, double intrinsic_v = 1.0);

// Number of standard deviations by which a visibility exceeds the local
// bound 1/sqrt(2). sigma_v must be positive.
double chsh_significance(double visibility, double sigma_v);

}  // namespace timebin
