#include "timebin/analytic.hpp"

#include <cmath>
#include <stdexcept>

namespace timebin {

namespace {

constexpr std::complex<double> kImag{0.0, 1.0};

// Analyzer coefficient for input bin j -> (bin, port). Zero unless
// bin == j (short arm) or bin == j + 1 (long arm).
std::complex<double> analyzer_coeff(int j, int bin, Port port, double phase) {
    const std::complex<double> long_arm = std::exp(kImag * phase);
    if (bin == j) return port == Port::minus ? std::complex<double>(0.5, 0.0) : 0.5 * kImag;
    if (bin == j + 1) return port == Port::minus ? -0.5 * long_arm : 0.5 * kImag * long_arm;
    return {0.0, 0.0};
}

// Straight-to-detector coefficient used when the analyzers are absent:
// the photon stays in its creation bin and reaches the minus port.
std::complex<double> identity_coeff(int j, int bin, Port port) {
    return (bin == j && port == Port::minus) ? std::complex<double>(1.0, 0.0)
                                             : std::complex<double>(0.0, 0.0);
}

}  // namespace

double wrap_angle(double angle) noexcept {
    double a = std::remainder(angle, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    return a;
}

double TimeBinAmplitudes::norm_squared() const noexcept {
    double s = 0.0;
    for (const auto& a : bins) s += std::norm(a);
    return s;
}

double PortAmplitudes::norm_squared() const noexcept {
    double s = 0.0;
    for (const auto& a : amps) s += std::norm(a);
    return s;
}

double JointDistribution::sum() const noexcept {
    double s = 0.0;
    for (double v : p) s += v;
    return s;
}

TimeBinAmplitudes pump_state(double phi) {
    if (!std::isfinite(phi)) throw std::invalid_argument("pump_state: phase must be finite");
    TimeBinAmplitudes out;
    out.bins[0] = kInvSqrt2;
    out.bins[1] = -kInvSqrt2 * std::exp(kImag * phi);
    out.bins[2] = 0.0;
    return out;
}

PortAmplitudes analyzer_transform(const TimeBinAmplitudes& state, double phase) {
    if (!std::isfinite(phase)) throw std::invalid_argument("analyzer_transform: phase must be finite");
    if (std::norm(state.bins[2]) > 1e-24)
        throw std::invalid_argument("analyzer_transform: input occupies bin 2, would exceed the three-bin model");
    PortAmplitudes out;
    for (int j = 0; j < 2; ++j) {
        if (state.bins[j] == std::complex<double>{}) continue;
        for (int bin = j; bin <= j + 1; ++bin)
            for (Port port : {Port::minus, Port::plus})
                out.at(bin, port) += state.bins[j] * analyzer_coeff(j, bin, port, phase);
    }
    return out;
}

JointDistribution joint_detection_distribution(const PhaseSetting& phases,
                                               bool pump_interferometer,
                                               bool analyzer_interferometers) {
    if (!std::isfinite(phases.pump) || !std::isfinite(phases.alice) || !std::isfinite(phases.bob))
        throw std::invalid_argument("joint_detection_distribution: phases must be finite");

    // Pair creation amplitudes over the pump bins. Both photons of a pair
    // share the creation bin.
    std::array<std::complex<double>, 2> pair_amp{};
    if (pump_interferometer) {
        const TimeBinAmplitudes pump = pump_state(phases.pump);
        pair_amp[0] = pump.bins[0];
        pair_amp[1] = pump.bins[1];
    } else {
        pair_amp[0] = 1.0;
    }

    JointDistribution dist;
    for (int bin_a = 0; bin_a < kNumBins; ++bin_a)
        for (Port port_a : {Port::minus, Port::plus})
            for (int bin_b = 0; bin_b < kNumBins; ++bin_b)
                for (Port port_b : {Port::minus, Port::plus}) {
                    std::complex<double> amp{};
                    for (int j = 0; j < 2; ++j) {
                        if (pair_amp[j] == std::complex<double>{}) continue;
                        const std::complex<double> ta =
                            analyzer_interferometers ? analyzer_coeff(j, bin_a, port_a, phases.alice)
                                                     : identity_coeff(j, bin_a, port_a);
                        const std::complex<double> tb =
                            analyzer_interferometers ? analyzer_coeff(j, bin_b, port_b, phases.bob)
                                                     : identity_coeff(j, bin_b, port_b);
                        amp += pair_amp[j] * ta * tb;
                    }
                    dist.p[JointDistribution::index(bin_a, port_a, bin_b, port_b)] = std::norm(amp);
                }
    return dist;
}

double triple_coincidence_rate(double theta, double visibility) {
    if (!std::isfinite(theta)) throw std::invalid_argument("triple_coincidence_rate: theta must be finite");
    if (!(visibility >= 0.0 && visibility <= 1.0))
        throw std::invalid_argument("triple_coincidence_rate: visibility must be in [0, 1]");
    return 1.0 - visibility * std::cos(theta);
}

VisibilityPrediction multiphoton_visibility(double p_pair, double intrinsic_v) {
    if (!(p_pair >= 0.0 && p_pair < 0.5))
        throw std::invalid_argument("multiphoton_visibility: p_pair must be in [0, 0.5)");
    if (!(intrinsic_v >= 0.0 && intrinsic_v <= 1.0))
        throw std::invalid_argument("multiphoton_visibility: intrinsic_v must be in [0, 1]");
    VisibilityPrediction out;
    out.p_pair = p_pair;
    out.v_exact = (1.0 + p_pair) / (1.0 + 2.0 * p_pair);
    out.v_linear = 1.0 - p_pair;
    out.intrinsic_v = intrinsic_v;
    out.rate_const_coeff = p_pair + 2.0 * p_pair * p_pair;
    out.rate_cos_coeff = p_pair + p_pair * p_pair;
    return out;
}

double chsh_significance(double visibility, double sigma_v) {
    if (!(sigma_v > 0.0)) throw std::invalid_argument("chsh_significance: sigma_v must be positive");
    return (visibility - kInvSqrt2) / sigma_v;
}

}  // namespace timebin
