#include <cmath>
#include <complex>

#include "doctest.h"
#include "support/oracles.hpp"
#include "timebin/analytic.hpp"
#include "timebin/rng.hpp"

using namespace timebin;

namespace {
double central_minus_minus(const JointDistribution& d) {
    return d.at(0, Port::minus, 0, Port::minus) + d.at(1, Port::minus, 1, Port::minus) +
           d.at(2, Port::minus, 2, Port::minus);
}
}  // namespace

TEST_CASE("pump state amplitudes") {
    const TimeBinAmplitudes s0 = pump_state(0.0);
    CHECK(std::abs(s0.bins[0] - std::complex<double>(0.70710678118654752, 0.0)) < 1e-15);
    CHECK(std::abs(s0.bins[1] - std::complex<double>(-0.70710678118654752, 0.0)) < 1e-15);
    CHECK(std::abs(s0.bins[2]) == 0.0);

    const TimeBinAmplitudes spi = pump_state(kPi);
    CHECK(spi.bins[1].real() == doctest::Approx(0.70710678118654752).epsilon(1e-12));
    CHECK(std::abs(spi.bins[1].imag()) < 1e-15);

    SplitMix64 rng(42);
    for (int i = 0; i < 1000; ++i) {
        const double phi = (rng.uniform() - 0.5) * 40.0;
        CHECK(pump_state(phi).norm_squared() == doctest::Approx(1.0).epsilon(1e-12));
    }

    CHECK_THROWS_AS(pump_state(std::nan("")), std::invalid_argument);
    CHECK_THROWS_AS(pump_state(std::numeric_limits<double>::infinity()), std::invalid_argument);
}

TEST_CASE("analyzer transform amplitudes and unitarity") {
    TimeBinAmplitudes bin0;
    bin0.bins[0] = 1.0;
    const PortAmplitudes out = analyzer_transform(bin0, 0.7);
    for (int bin = 0; bin < 2; ++bin)
        for (Port port : {Port::minus, Port::plus})
            CHECK(std::abs(out.at(bin, port)) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(out.at(2, Port::minus)) == 0.0);

    // bin 1 input occupies bins {1, 2} only
    TimeBinAmplitudes bin1;
    bin1.bins[1] = 1.0;
    const PortAmplitudes shifted = analyzer_transform(bin1, 1.3);
    CHECK(std::abs(shifted.at(0, Port::minus)) == 0.0);
    CHECK(std::abs(shifted.at(0, Port::plus)) == 0.0);
    CHECK(std::abs(shifted.at(1, Port::minus)) == doctest::Approx(0.5));
    CHECK(std::abs(shifted.at(2, Port::plus)) == doctest::Approx(0.5));

    // norm preservation over random two-bin states and phases
    SplitMix64 rng(7);
    for (int i = 0; i < 1000; ++i) {
        TimeBinAmplitudes in;
        in.bins[0] = std::complex<double>(rng.uniform() - 0.5, rng.uniform() - 0.5);
        in.bins[1] = std::complex<double>(rng.uniform() - 0.5, rng.uniform() - 0.5);
        const PortAmplitudes o = analyzer_transform(in, rng.uniform() * 20.0 - 10.0);
        CHECK(o.norm_squared() == doctest::Approx(in.norm_squared()).epsilon(1e-12));
    }

    TimeBinAmplitudes bad;
    bad.bins[2] = 0.3;
    CHECK_THROWS_AS(analyzer_transform(bad, 0.0), std::invalid_argument);
}

TEST_CASE("joint distribution matches the term-expansion oracle") {
    SplitMix64 rng(2024);
    for (int i = 0; i < 50; ++i) {
        const PhaseSetting ps{rng.uniform() * 2 * kPi, rng.uniform() * 2 * kPi, rng.uniform() * 2 * kPi};
        const JointDistribution dist = joint_detection_distribution(ps);
        const auto oracle = test_oracles::joint_table_by_term_expansion(ps.pump, ps.alice, ps.bob);
        for (std::size_t k = 0; k < 36; ++k) CHECK(dist.p[k] == doctest::Approx(oracle[k]).epsilon(1e-12));
        CHECK(dist.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("joint distribution fixed entries") {
    // Frozen values, independently derived by expanding the pair state
    // through both analyzers by hand.
    const PhaseSetting theta_pi{0.0, kPi / 2, kPi / 2};  // theta = pi
    const JointDistribution d = joint_detection_distribution(theta_pi);
    CHECK(d.at(1, Port::minus, 1, Port::minus) == doctest::Approx(0.125).epsilon(1e-12));

    SplitMix64 rng(5);
    for (int i = 0; i < 20; ++i) {
        const PhaseSetting ps{rng.uniform() * 7, rng.uniform() * 7, rng.uniform() * 7};
        const JointDistribution dist = joint_detection_distribution(ps);
        const double theta = ps.theta();
        // interference lives only in the central entry
        CHECK(dist.at(1, Port::minus, 1, Port::minus) ==
              doctest::Approx((1.0 - std::cos(theta)) / 16.0).epsilon(1e-12));
        // corner and satellite entries are phase independent
        CHECK(dist.at(0, Port::minus, 0, Port::minus) == doctest::Approx(1.0 / 32.0).epsilon(1e-12));
        CHECK(dist.at(2, Port::minus, 2, Port::minus) == doctest::Approx(1.0 / 32.0).epsilon(1e-12));
        CHECK(dist.at(0, Port::minus, 1, Port::minus) == doctest::Approx(1.0 / 32.0).epsilon(1e-12));
        CHECK(dist.at(1, Port::minus, 0, Port::minus) == doctest::Approx(1.0 / 32.0).epsilon(1e-12));
        // photons from one pair cannot end up two bins apart
        CHECK(dist.at(0, Port::minus, 2, Port::minus) == 0.0);
        CHECK(dist.at(2, Port::plus, 0, Port::minus) == 0.0);
    }
}

TEST_CASE("two-fold ceiling and phase-averaged peak ratio") {
    SplitMix64 rng(11);
    for (int i = 0; i < 20; ++i) {
        const PhaseSetting ps{rng.uniform() * 7, rng.uniform() * 7, rng.uniform() * 7};
        const JointDistribution d = joint_detection_distribution(ps);
        CHECK(central_minus_minus(d) ==
              doctest::Approx((2.0 - std::cos(ps.theta())) / 16.0).epsilon(1e-12));
    }

    // integrate over theta on a uniform grid: central to satellites 2:1:1
    double central = 0.0, left = 0.0, right = 0.0;
    const int n = 256;
    for (int k = 0; k < n; ++k) {
        const PhaseSetting ps{0.0, 2 * kPi * k / n, 0.0};
        const JointDistribution d = joint_detection_distribution(ps);
        central += central_minus_minus(d);
        left += d.at(1, Port::minus, 0, Port::minus) + d.at(2, Port::minus, 1, Port::minus);
        right += d.at(0, Port::minus, 1, Port::minus) + d.at(1, Port::minus, 2, Port::minus);
    }
    CHECK(central / left == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(central / right == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(left == doctest::Approx(right).epsilon(1e-12));
}

TEST_CASE("joint distribution symmetry under exchanging the two sides") {
    SplitMix64 rng(13);
    for (int i = 0; i < 20; ++i) {
        const PhaseSetting ps{rng.uniform() * 7, rng.uniform() * 7, rng.uniform() * 7};
        const PhaseSetting swapped{ps.pump, ps.bob, ps.alice};
        const JointDistribution d = joint_detection_distribution(ps);
        const JointDistribution ds = joint_detection_distribution(swapped);
        for (int ba = 0; ba < 3; ++ba)
            for (Port pa : {Port::minus, Port::plus})
                for (int bb = 0; bb < 3; ++bb)
                    for (Port pb : {Port::minus, Port::plus})
                        CHECK(d.at(ba, pa, bb, pb) == doctest::Approx(ds.at(bb, pb, ba, pa)).epsilon(1e-12));
    }
}

TEST_CASE("joint distribution geometry flags") {
    const PhaseSetting ps{0.4, 1.1, 2.2};
    // pump off: pairs created in bin 0 only, analyzers spread to bins {0,1}
    const JointDistribution no_pump = joint_detection_distribution(ps, false, true);
    CHECK(no_pump.sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (int ba = 0; ba < 3; ++ba)
        for (int bb = 0; bb < 3; ++bb)
            for (Port pa : {Port::minus, Port::plus})
                for (Port pb : {Port::minus, Port::plus}) {
                    if (ba > 1 || bb > 1)
                        CHECK(no_pump.at(ba, pa, bb, pb) == 0.0);
                    else
                        CHECK(no_pump.at(ba, pa, bb, pb) == doctest::Approx(1.0 / 16.0).epsilon(1e-12));
                }

    // no interferometers at all: both photons at bin 0, minus port
    const JointDistribution bare = joint_detection_distribution(ps, false, false);
    CHECK(bare.at(0, Port::minus, 0, Port::minus) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(bare.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("triple coincidence rate") {
    CHECK(triple_coincidence_rate(0.0, 1.0) == doctest::Approx(0.0));
    CHECK(triple_coincidence_rate(kPi, 1.0) == doctest::Approx(2.0));
    CHECK(triple_coincidence_rate(kPi / 2, 0.91) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(triple_coincidence_rate(0.0, 1.2), std::invalid_argument);
    CHECK_THROWS_AS(triple_coincidence_rate(0.0, -0.1), std::invalid_argument);
}

TEST_CASE("multiphoton visibility") {
    CHECK(multiphoton_visibility(0.0).v_exact == doctest::Approx(1.0));
    CHECK(multiphoton_visibility(0.0).v_linear == doctest::Approx(1.0));
    CHECK(multiphoton_visibility(0.1).v_exact == doctest::Approx(11.0 / 12.0).epsilon(1e-12));

    // slope at zero pair probability, by central finite difference
    const double h = 1e-6;
    const double slope =
        (multiphoton_visibility(2 * h).v_exact - multiphoton_visibility(0.0).v_exact) / (2 * h);
    CHECK(slope == doctest::Approx(-1.0).epsilon(1e-4));

    const VisibilityPrediction v = multiphoton_visibility(0.1, 0.98);
    CHECK(v.rate_const_coeff == doctest::Approx(0.1 + 2 * 0.01).epsilon(1e-12));
    CHECK(v.rate_cos_coeff == doctest::Approx(0.1 + 0.01).epsilon(1e-12));
    CHECK(v.total_visibility() == doctest::Approx(0.98 * 11.0 / 12.0).epsilon(1e-12));

    // strictly decreasing, bounded below by the linear law, gap 2p^2/(1+2p)
    double prev = 1.0 + 1e-9;
    for (int i = 0; i < 50; ++i) {
        const double p = 0.01 * i;
        const VisibilityPrediction pred = multiphoton_visibility(p);
        CHECK(pred.v_exact < prev);
        CHECK(pred.v_exact >= pred.v_linear);
        CHECK(pred.v_exact - pred.v_linear ==
              doctest::Approx(2 * p * p / (1 + 2 * p)).epsilon(1e-12));
        CHECK(pred.v_exact > 0.5);
        prev = pred.v_exact;
    }

    CHECK_THROWS_AS(multiphoton_visibility(0.5), std::invalid_argument);
    CHECK_THROWS_AS(multiphoton_visibility(-0.01), std::invalid_argument);
}

TEST_CASE("chsh significance") {
    CHECK(chsh_significance(0.91, 0.008) == doctest::Approx(25.3617).epsilon(1e-4));
    CHECK(chsh_significance(kInvSqrt2, 0.01) == doctest::Approx(0.0));
    const double sigma = 0.0123;
    CHECK(chsh_significance(kInvSqrt2 + 3 * sigma, sigma) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK_THROWS_AS(chsh_significance(0.9, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(chsh_significance(0.9, -1.0), std::invalid_argument);
}

TEST_CASE("wrap_angle reduces to (-pi, pi]") {
    CHECK(wrap_angle(0.0) == doctest::Approx(0.0));
    CHECK(wrap_angle(3 * kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(2 * kPi + 0.25) == doctest::Approx(0.25).epsilon(1e-12));
}
