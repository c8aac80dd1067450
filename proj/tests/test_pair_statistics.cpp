#include <cmath>
#include <limits>

#include "doctest.h"
#include "support/oracles.hpp"
#include "timebin/pair_statistics.hpp"
#include "timebin/rng.hpp"

using namespace timebin;

TEST_CASE("poisson pair number distribution") {
    const auto dist = PairNumberDistribution::poisson(0.1);
    dist.validate();
    double sum = 0.0;
    for (double p : dist.probabilities) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dist.probabilities[2] / dist.probabilities[1] == doctest::Approx(0.05).epsilon(1e-12));

    const auto big = PairNumberDistribution::poisson(0.5);
    big.validate();
}

TEST_CASE("start and stop probabilities") {
    ChannelParams ch;
    ch.filter_pass = 1.0;
    ch.filter_pass_given_twin = 1.0;

    CHECK(p_start_given_n(0, ch) == doctest::Approx(0.0));

    ch.transmission = 0.5;
    ch.efficiency = 0.8;  // q = 0.4
    CHECK(p_start_given_n(1, ch) == doctest::Approx(0.4).epsilon(1e-12));

    ch.transmission = 1.0;
    ch.efficiency = 0.5;  // q = 0.5
    CHECK(p_start_given_n(2, ch) == doctest::Approx(0.75).epsilon(1e-12));

    // stop side mirrors the start side with the twin-conditioned filter
    ChannelParams stop;
    stop.transmission = 1.0;
    stop.efficiency = 0.1;
    stop.filter_pass_given_twin = 1.0;
    CHECK(p_stop_same_pulse_given_n(0, stop) == doctest::Approx(0.0));
    CHECK(p_stop_same_pulse_given_n(1, stop) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(p_stop_same_pulse_given_n(3, stop) == doctest::Approx(1.0 - 0.9 * 0.9 * 0.9).epsilon(1e-12));

    CHECK_THROWS_AS(p_start_given_n(-1, ch), std::invalid_argument);
}

TEST_CASE("stop probability from the following pulse") {
    ChannelParams stop;
    stop.transmission = 0.3;
    stop.efficiency = 0.3;  // q = 0.09

    const auto empty = PairNumberDistribution::poisson(0.0);
    CHECK(p_stop_next_pulse(empty, stop) == doctest::Approx(0.0));

    // single-term distribution: P(1) = p
    PairNumberDistribution single;
    single.mean = 0.2;
    single.probabilities = {0.8, 0.2};
    CHECK(p_stop_next_pulse(single, stop) == doctest::Approx(0.2 * 0.09).epsilon(1e-12));

    // frozen reference from an independent brute-force summation
    const auto poisson = PairNumberDistribution::poisson(0.1);
    CHECK(p_stop_next_pulse(poisson, stop) == doctest::Approx(0.008959621227116332).epsilon(1e-12));

    // and against an in-test direct summation with factorials
    double brute = 0.0;
    double fact = 1.0;
    for (int m = 0; m <= 20; ++m) {
        if (m > 0) fact *= m;
        brute += std::exp(-0.1) * std::pow(0.1, m) / fact * (1.0 - std::pow(1.0 - 0.09, m));
    }
    CHECK(p_stop_next_pulse(poisson, stop) == doctest::Approx(brute).epsilon(1e-12));
}

TEST_CASE("main to side peak ratio") {
    ChannelParams stop;
    stop.transmission = 0.3;
    stop.efficiency = 0.3;  // t eta = 0.09, no filters
    CHECK(main_side_ratio(0.05, stop) == doctest::Approx(1.0 / (0.05 * 0.91)).epsilon(1e-12));

    // with vanishing stop detection the simple inverse ratio is recovered
    ChannelParams weak = stop;
    weak.transmission = 1e-9;
    weak.efficiency = 1e-9;
    CHECK(main_side_ratio(0.05, weak) == doctest::Approx(1.0 / 0.05).epsilon(1e-6));

    CHECK_THROWS_AS(main_side_ratio(0.0, stop), std::invalid_argument);
    CHECK_THROWS_AS(main_side_ratio(1.0, stop), std::invalid_argument);
}

TEST_CASE("closed-form ratio equals the exhaustive enumeration oracle") {
    SplitMix64 rng(314159);
    for (int i = 0; i < 100; ++i) {
        const double p_pair = 0.001 + 0.199 * rng.uniform();
        ChannelParams start;
        start.transmission = 0.05 + 0.9 * rng.uniform();
        start.efficiency = 0.05 + 0.9 * rng.uniform();
        start.filter_pass = 0.05 + 0.95 * rng.uniform();
        start.filter_pass_given_twin = start.filter_pass;
        ChannelParams stop;
        stop.transmission = 0.05 + 0.9 * rng.uniform();
        stop.efficiency = 0.05 + 0.9 * rng.uniform();
        stop.filter_pass = 0.05 + 0.95 * rng.uniform();
        stop.filter_pass_given_twin = std::min(1.0, stop.filter_pass + (1.0 - stop.filter_pass) * rng.uniform());

        const auto peaks = test_oracles::enumerate_peak_probabilities(p_pair, start, stop);
        REQUIRE(peaks.side > 0.0);
        const double enumerated_ratio = peaks.main / peaks.side;
        CHECK(main_side_ratio(p_pair, stop) ==
              doctest::Approx(enumerated_ratio).epsilon(1e-12));
    }
}

TEST_CASE("enumeration oracle shows the ratio is independent of the start side") {
    ChannelParams stop;
    stop.transmission = 0.4;
    stop.efficiency = 0.25;
    stop.filter_pass = 0.7;
    stop.filter_pass_given_twin = 0.95;
    double reference = 0.0;
    SplitMix64 rng(99);
    for (int i = 0; i < 10; ++i) {
        ChannelParams start;
        start.transmission = 0.05 + 0.9 * rng.uniform();
        start.efficiency = 0.05 + 0.9 * rng.uniform();
        start.filter_pass = 0.05 + 0.95 * rng.uniform();
        start.filter_pass_given_twin = start.filter_pass;
        const auto peaks = test_oracles::enumerate_peak_probabilities(0.07, start, stop);
        const double ratio = peaks.main / peaks.side;
        if (i == 0)
            reference = ratio;
        else
            CHECK(ratio == doctest::Approx(reference).epsilon(1e-12));
    }
    CHECK(main_side_ratio(0.07, stop) == doctest::Approx(reference).epsilon(1e-12));
}

TEST_CASE("side peak estimator") {
    const PpairEstimate est = estimate_ppair_sidepeak(10000, 500);
    CHECK(est.value == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(est.method == PpairMethod::side_peak);

    const PpairEstimate empty = estimate_ppair_sidepeak(10000, 0);
    CHECK(empty.value == 0.0);
    CHECK(std::isinf(empty.relative_uncertainty));

    // about 3 % relative uncertainty at 1000 side counts
    const PpairEstimate thousand = estimate_ppair_sidepeak(20000, 1000);
    CHECK(thousand.relative_uncertainty == doctest::Approx(std::sqrt(1.0 / 1000 + 1.0 / 20000)));
    CHECK(thousand.relative_uncertainty > 0.025);
    CHECK(thousand.relative_uncertainty < 0.04);

    CHECK_THROWS_AS(estimate_ppair_sidepeak(0, 5), std::invalid_argument);
}

TEST_CASE("side peak estimator bias correction") {
    ChannelParams stop;
    stop.transmission = 0.3;
    stop.efficiency = 0.3;
    // with q = 0.09 the raw ratio underestimates by (1 - q)
    const PpairEstimate corrected = estimate_ppair_sidepeak(10000, 455, stop);
    CHECK(corrected.value == doctest::Approx(0.0455 / 0.91).epsilon(1e-12));
}

TEST_CASE("estimator round trip through the implied rates") {
    // counts generated exactly from the closed-form ratio reproduce p_pair
    ChannelParams stop;
    stop.transmission = 0.3;
    stop.efficiency = 0.3;
    stop.filter_pass = 0.8;
    stop.filter_pass_given_twin = 1.0;
    const double p_pair = 0.04;
    const double ratio = main_side_ratio(p_pair, stop);
    const std::uint64_t main_counts = 9000000;
    const std::uint64_t side_counts = static_cast<std::uint64_t>(std::llround(main_counts / ratio));
    const PpairEstimate est = estimate_ppair_sidepeak(main_counts, side_counts, stop);
    CHECK(est.value == doctest::Approx(p_pair).epsilon(1e-5));
}

TEST_CASE("standard estimator") {
    const PpairEstimate est =
        estimate_ppair_standard(2.052e5, Uncertain{0.3, 0.0}, Uncertain{0.09, 0.0}, 76e6);
    CHECK(est.value == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(est.method == PpairMethod::standard);
    CHECK(est.relative_uncertainty == doctest::Approx(0.0));

    const PpairEstimate err =
        estimate_ppair_standard(2.052e5, Uncertain{0.30, 0.06}, Uncertain{0.30, 0.06}, 76e6);
    CHECK(err.relative_uncertainty == doctest::Approx(std::sqrt(0.08)).epsilon(1e-12));
    CHECK(err.relative_uncertainty > 0.28);
    CHECK(err.relative_uncertainty < 0.30);

    const PpairEstimate doubled =
        estimate_ppair_standard(2 * 2.052e5, Uncertain{0.3, 0.0}, Uncertain{0.09, 0.0}, 76e6);
    CHECK(doubled.value == doctest::Approx(2 * est.value).epsilon(1e-12));

    CHECK_THROWS_AS(estimate_ppair_standard(1e5, Uncertain{0.0, 0.0}, Uncertain{0.09, 0.0}, 76e6),
                    std::invalid_argument);
    CHECK_THROWS_AS(estimate_ppair_standard(1e5, Uncertain{0.3, 0.0}, Uncertain{0.09, 0.0}, 0.0),
                    std::invalid_argument);
}

TEST_CASE("probabilities stay in the unit interval") {
    SplitMix64 rng(55);
    for (int i = 0; i < 200; ++i) {
        ChannelParams ch;
        ch.transmission = rng.uniform();
        ch.efficiency = rng.uniform();
        ch.filter_pass = rng.uniform();
        ch.filter_pass_given_twin = rng.uniform();
        double prev = -1.0;
        for (int n = 0; n < 10; ++n) {
            const double p = p_start_given_n(n, ch);
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
            if (ch.detect_prob() > 0.0) CHECK(p > prev);  // strictly increasing in n
            prev = p;
        }
    }
}
