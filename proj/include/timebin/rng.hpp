// Counter-friendly random number generation for the simulation engine.
//
// Every pulse of a run owns its own generator, derived from
// (run seed, pulse index, stream salt). Results are therefore independent
// of how a run is partitioned into chunks or threads, which is what the
// engine's determinism contract relies on. Samplers are hand-rolled so
// that streams are bit-stable across compilers and standard libraries.
#pragma once

#include <cmath>
#include <cstdint>

namespace timebin {

// Finalizer of the splitmix64 generator (Steele, Lea, Flood 2014 variant).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t state = 0) noexcept : state_(state) {}

    std::uint64_t next() noexcept {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    // Integer in [0, n), n > 0. Modulo bias is < 2^-50 for the ranges used
    // here (pulse periods, gate widths).
    std::int64_t below(std::int64_t n) noexcept {
        return static_cast<std::int64_t>(next() % static_cast<std::uint64_t>(n));
    }

    double gaussian() noexcept {
        // Box-Muller; one value per call, the sine branch is discarded.
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

  private:
    std::uint64_t state_;
};

// Salts separating the independent per-pulse streams.
enum class StreamSalt : std::uint64_t {
    pair_sampling = 0x70616972ULL,   // pair number and quantum outcomes
    channel = 0x6368616eULL,         // filters, losses, detector efficiency
    dark_counts = 0x6461726bULL,     // dark count candidates
};

inline SplitMix64 pulse_stream(std::uint64_t seed, std::uint64_t pulse_index, StreamSalt salt) noexcept {
    std::uint64_t s = mix64(seed ^ 0xA3C59AC2F1037E15ULL);
    s = mix64(s ^ (pulse_index * 0x9E3779B97F4A7C15ULL) ^ static_cast<std::uint64_t>(salt));
    return SplitMix64(s);
}

// Poisson sampling by CDF inversion. Intended for small means (pairs per
// pulse, dark counts per pulse), where the expected number of iterations
// is 1 + mean.
class PoissonSampler {
  public:
    explicit PoissonSampler(double mean = 0.0)
        : mean_(mean), exp_neg_mean_(std::exp(-mean)) {}

    double mean() const noexcept { return mean_; }

    int sample(SplitMix64& rng) const noexcept {
        double u = rng.uniform();
        if (u < exp_neg_mean_) return 0;
        double term = exp_neg_mean_;
        double cdf = term;
        int k = 0;
        while (u >= cdf) {
            ++k;
            term *= mean_ / k;
            cdf += term;
            if (k > 4096) break;  // unreachable for the means this project uses
        }
        return k;
    }

  private:
    double mean_;
    double exp_neg_mean_;
};

}  // namespace timebin
