// Unit tests for the model core: potential, saturation, controller pieces,
// state plumbing, and the closed-loop right-hand side.  Oracles are
// independent re-derivations written directly in this file (unfactored
// formulas, finite differences, hand-built small cases) rather than calls
// back into the code under test.

#include "test_support.hpp"

#include <stdexcept>

#include "platoonlab/model.hpp"

using namespace platoonlab;
using testsupport::rel_err;
using testsupport::u01;
using testsupport::uniform;

namespace {

const PotentialSpec kPot{0.1, 5.0, 40.0};
const SaturationSpec kSat = SaturationSpec::make(30.0, 35.0);

ControllerConfig ring_config() {
    ControllerConfig cfg;
    cfg.law = ControlLaw::Bidirectional;
    cfg.mu = 0.1;
    cfg.potential = kPot;
    cfg.saturation = kSat;
    return cfg;
}

// Oracle: the potential and its derivatives via the raw quotient forms,
// structurally different from the factored implementation.
double oracle_V(double s, const PotentialSpec& p) {
    const double num = std::pow(p.lam - s, 4.0);
    const double den = (s - p.L) * (s - p.L);
    return p.q * num / den;
}

double oracle_Vp(double s, const PotentialSpec& p) {
    const double u = p.lam - s, w = s - p.L;
    return p.q * (-4.0 * std::pow(u, 3.0) * w * w - 2.0 * std::pow(u, 4.0) * w) / std::pow(w, 4.0);
}

double oracle_Vpp(double s, const PotentialSpec& p) {
    // Differentiate oracle_Vp's numerator/denominator by the quotient rule:
    // N = -4u^3 w^2 - 2u^4 w,  N' = 12u^2 w^2 - 2u^4  (the u^3 w terms cancel).
    const double u = p.lam - s, w = s - p.L;
    const double N = -4.0 * std::pow(u, 3.0) * w * w - 2.0 * std::pow(u, 4.0) * w;
    const double Nprime = 12.0 * u * u * w * w - 2.0 * std::pow(u, 4.0);
    return p.q * Nprime / std::pow(w, 4.0) - 4.0 * p.q * N / std::pow(w, 5.0);
}

// Kinetic energy of one vehicle as the energy function uses it.
double kinetic(double v, double f, double v_max) {
    return 0.5 * v_max * v_max * (v - f) * (v - f) / (v * (v_max - v));
}

}  // namespace

TEST_CASE("potential vanishes beyond the interaction range and at infinity", "[potential]") {
    CHECK(potential_value(kPot.lam, kPot) == 0.0);
    CHECK(potential_value(kPot.lam + 1e-12, kPot) == 0.0);
    CHECK(potential_value(123.0, kPot) == 0.0);
    CHECK(potential_value(kInfiniteSpacing, kPot) == 0.0);
    CHECK(potential_d1(kPot.lam, kPot) == 0.0);
    CHECK(potential_d1(kInfiniteSpacing, kPot) == 0.0);
    CHECK(potential_d2(kPot.lam, kPot) == 0.0);
    CHECK(potential_d2(kInfiniteSpacing, kPot) == 0.0);
}

TEST_CASE("potential blows up toward the safety distance and rejects the barrier itself",
          "[potential]") {
    CHECK(potential_value(kPot.L + 1e-6, kPot) > 1e11);
    CHECK_THROWS_AS(potential_value(kPot.L, kPot), std::domain_error);
    CHECK_THROWS_AS(potential_value(kPot.L - 1.0, kPot), std::domain_error);
    CHECK_THROWS_AS(potential_d1(kPot.L, kPot), std::domain_error);
    CHECK_THROWS_AS(potential_d2(4.0, kPot), std::domain_error);
}

TEST_CASE("potential matches an independent transcription on random spacings", "[potential]") {
    std::mt19937_64 rng(101);
    for (int k = 0; k < 500; ++k) {
        const double s = uniform(rng, kPot.L + 0.05, kPot.lam - 1e-6);
        CHECK(rel_err(potential_value(s, kPot), oracle_V(s, kPot)) < 1e-13);
        CHECK(rel_err(potential_d1(s, kPot), oracle_Vp(s, kPot)) < 1e-12);
        CHECK(rel_err(potential_d2(s, kPot), oracle_Vpp(s, kPot)) < 1e-11);
    }
}

TEST_CASE("potential derivatives agree with finite differences", "[potential]") {
    std::mt19937_64 rng(102);
    for (int k = 0; k < 200; ++k) {
        const double s = uniform(rng, kPot.L + 0.5, kPot.lam - 0.5);
        const double h = 1e-6;
        const double fd1 = (potential_value(s + h, kPot) - potential_value(s - h, kPot)) / (2 * h);
        const double fd2 = (potential_d1(s + h, kPot) - potential_d1(s - h, kPot)) / (2 * h);
        CHECK(rel_err(potential_d1(s, kPot), fd1) < 1e-7);
        CHECK(rel_err(potential_d2(s, kPot), fd2) < 1e-7);
    }
}

TEST_CASE("potential shape: decreasing and convex inside the interaction range", "[potential]") {
    std::mt19937_64 rng(103);
    for (int k = 0; k < 200; ++k) {
        const double s = uniform(rng, kPot.L + 1e-3, kPot.lam - 1e-9);
        CHECK(potential_value(s, kPot) > 0.0);
        CHECK(potential_d1(s, kPot) < 0.0);
        CHECK(potential_d2(s, kPot) > 0.0);
    }
}

TEST_CASE("saturation is centered, bounded, and increasing", "[saturation]") {
    CHECK(std::abs(b_value(0.0, kSat)) < 1e-12);  // zero coupling leaves the cruise speed alone
    // Far out the curve reaches its limits (exactly so in double precision).
    CHECK(b_value(50.0, kSat) <= kSat.v_star);
    CHECK(b_value(50.0, kSat) > kSat.v_star - 1e-6);
    CHECK(b_value(-50.0, kSat) >= kSat.v_star - kSat.v_max);
    CHECK(b_value(-50.0, kSat) < kSat.v_star - kSat.v_max + 1e-6);

    // Strict growth holds on the band where tanh is not yet saturated.
    double prev_b = b_value(-12.0, kSat);
    for (int k = 0; k < 300; ++k) {
        const double x = -12.0 + 24.0 * (k + 1) / 300.0;
        const double bx = b_value(x, kSat);
        CHECK(bx > prev_b);
        CHECK(bx > kSat.v_star - kSat.v_max);
        CHECK(bx < kSat.v_star);
        prev_b = bx;
        CHECK(b_d1(x, kSat) > 0.0);
        if (std::abs(x) < 8.0) {
            const double h = 1e-4;
            const double fd = (b_value(x + h, kSat) - b_value(x - h, kSat)) / (2 * h);
            CHECK(rel_err(b_d1(x, kSat), fd) < 1e-4);
        }
    }
}

TEST_CASE("saturation spec validation", "[saturation]") {
    CHECK_THROWS_AS(SaturationSpec::make(0.0, 35.0), std::invalid_argument);
    CHECK_THROWS_AS(SaturationSpec::make(35.0, 35.0), std::invalid_argument);
    CHECK_THROWS_AS(SaturationSpec::make(36.0, 35.0), std::invalid_argument);
    CHECK_THROWS_AS(SaturationSpec::make(30.0, 0.0), std::invalid_argument);
    // The centering shift is exactly the inverse tanh of the asymmetry.
    const SaturationSpec sat = SaturationSpec::make(10.0, 35.0);
    CHECK(rel_err(std::tanh(sat.shift), 1.0 - 2.0 * 10.0 / 35.0) < 1e-12);
}

TEST_CASE("target speed stays inside the admissible band", "[controller]") {
    std::mt19937_64 rng(105);
    const ControllerConfig cfg = ring_config();
    const RoadTopology topo = RoadTopology::ring(130.0);
    // Arbitrarily harsh states: the band closes up to [0, v_max] because tanh
    // saturates exactly in double precision under extreme couplings.
    for (int k = 0; k < 200; ++k) {
        const PlatoonState st = testsupport::random_ring_state(rng, 4, 130.0, kPot.L, kSat.v_max);
        const ExtendedSpacings ext = extend(st, topo);
        for (int i = 1; i <= 4; ++i) {
            const double f = target_speed(i, ext, cfg);
            CHECK(f >= 0.0);
            CHECK(f <= kSat.v_max);
        }
    }
    // Moderate couplings keep it strictly interior.
    for (int k = 0; k < 200; ++k) {
        std::vector<double> sp(3), vv(4);
        for (double& x : sp) x = uniform(rng, 25.0, 45.0);
        for (double& x : vv) x = uniform(rng, 1.0, 34.0);
        const PlatoonState st = PlatoonState::make(sp, vv);
        const ExtendedSpacings ext = extend(st, RoadTopology::ring(160.0));
        for (int i = 1; i <= 4; ++i) {
            const double f = target_speed(i, ext, cfg);
            CHECK(f > 0.0);
            CHECK(f < kSat.v_max);
        }
    }
}

TEST_CASE("target speed equals the cruise speed once all couplings vanish", "[controller]") {
    const ControllerConfig cfg = ring_config();
    const PlatoonState st = PlatoonState::make({45.0, 50.0}, {20.0, 25.0, 30.0});
    const ExtendedSpacings ext = extend(st, RoadTopology::ring(145.0));  // derived s_1 = 50
    for (int i = 1; i <= 3; ++i) CHECK(target_speed(i, ext, cfg) == kSat.v_star);
}

TEST_CASE("beta is the speed-gradient factor of the kinetic energy", "[controller]") {
    std::mt19937_64 rng(106);
    for (int k = 0; k < 300; ++k) {
        const double v = uniform(rng, 1.0, 34.0);
        const double y = uniform(rng, 1.0, 34.0);
        const double bet = beta(v, y, kSat.v_max);
        CHECK(bet > 0.0);
        const double h = 1e-6;
        const double fd = (kinetic(v + h, y, kSat.v_max) - kinetic(v - h, y, kSat.v_max)) / (2 * h);
        // d/dv kinetic = (v - y) beta(v, y); compare once v is away from y.
        if (std::abs(v - y) > 0.1) CHECK(rel_err(fd, (v - y) * bet) < 1e-6);
    }
    CHECK_THROWS_AS(beta(0.0, 10.0, 35.0), std::domain_error);
    CHECK_THROWS_AS(beta(35.0, 10.0, 35.0), std::domain_error);
    CHECK_THROWS_AS(beta(-1.0, 10.0, 35.0), std::domain_error);
}

TEST_CASE("viscosity vanishes with uniform speeds or inactive couplings", "[controller]") {
    const ControllerConfig cfg = ring_config();
    // Uniform speeds: both relative-speed factors are zero.
    {
        const PlatoonState st = PlatoonState::make({20.0, 25.0, 30.0}, {22.0, 22.0, 22.0, 22.0});
        const ExtendedSpacings ext = extend(st, RoadTopology::ring(130.0));
        for (int i = 1; i <= 4; ++i) CHECK(viscosity(i, ext, cfg) == 0.0);
    }
    // All spacings beyond the range: curvature factors are identically zero.
    {
        const PlatoonState st = PlatoonState::make({45.0, 46.0, 47.0}, {10.0, 20.0, 30.0, 15.0});
        const ExtendedSpacings ext = extend(st, RoadTopology::ring(180.0));
        for (int i = 1; i <= 4; ++i) CHECK(viscosity(i, ext, cfg) == 0.0);
    }
}

TEST_CASE("viscosity matches a hand-built three-vehicle evaluation", "[controller]") {
    const ControllerConfig cfg = ring_config();
    const double R = 80.0;
    const PlatoonState st = PlatoonState::make({24.0, 26.0}, {18.0, 22.0, 27.0});
    const RoadTopology topo = RoadTopology::ring(R);
    const ExtendedSpacings ext = extend(st, topo);

    const double s1 = R - 24.0 - 26.0;  // 30
    REQUIRE(ext.sp[1] == s1);
    // Vehicle 2 couples to its front gap s_2 and rear gap s_3: the rear
    // curvature multiplies (v_2 - v_3), the front curvature (v_1 - v_2).
    const double expected =
        -kSat.v_max * kSat.v_max *
        b_d1(oracle_Vp(26.0, kPot) - oracle_Vp(24.0, kPot), kSat) *
        (oracle_Vpp(26.0, kPot) * (22.0 - 27.0) - oracle_Vpp(24.0, kPot) * (18.0 - 22.0));
    CHECK(rel_err(viscosity(2, ext, cfg), expected) < 1e-12);

    // Vehicle 1 wraps: front gap is the derived s_1, rear gap s_2, and the
    // predecessor speed comes from vehicle n.
    const double expected1 =
        -kSat.v_max * kSat.v_max *
        b_d1(oracle_Vp(24.0, kPot) - oracle_Vp(s1, kPot), kSat) *
        (oracle_Vpp(24.0, kPot) * (18.0 - 22.0) - oracle_Vpp(s1, kPot) * (27.0 - 18.0));
    CHECK(rel_err(viscosity(1, ext, cfg), expected1) < 1e-12);
}

TEST_CASE("bidirectional acceleration matches an independent transcription", "[controller]") {
    std::mt19937_64 rng(107);
    const ControllerConfig cfg = ring_config();
    const RoadTopology topo = RoadTopology::ring(130.0);
    for (int k = 0; k < 300; ++k) {
        const PlatoonState st = testsupport::random_ring_state(rng, 4, 130.0, kPot.L, kSat.v_max);
        const ExtendedSpacings ext = extend(st, topo);
        for (int i = 1; i <= 4; ++i) {
            const size_t ki = static_cast<size_t>(i);
            const double vi = ext.vx[ki];
            const double vp_i = oracle_Vp(std::min(ext.sp[ki], kPot.lam), kPot);
            const double vp_n = oracle_Vp(std::min(ext.sp[ki + 1], kPot.lam), kPot);
            const double fi = kSat.v_star - b_value(vp_n - vp_i, kSat);
            const double zi = viscosity(i, ext, cfg);
            const double expected =
                ((zi - cfg.mu * kSat.v_max * kSat.v_max * (vi - fi)) / (vi * (kSat.v_max - vi)) +
                 vp_i - vp_n) /
                beta(vi, fi, kSat.v_max);
            CHECK(rel_err(accel(i, ext, cfg), expected) < 1e-11);
        }
    }
}

TEST_CASE("both laws are exactly at rest on their equilibria", "[controller]") {
    // Ring point equilibrium: uniform spacing below the range, all speeds at
    // cruise.
    ControllerConfig cfg = ring_config();
    const RoadTopology topo = RoadTopology::ring(130.0);
    const PlatoonState st = PlatoonState::make({32.5, 32.5, 32.5}, {30.0, 30.0, 30.0, 30.0});
    const ExtendedSpacings ext = extend(st, topo);
    for (int i = 1; i <= 4; ++i) {
        CHECK(accel_bidirectional(i, ext, cfg) == 0.0);
        CHECK(accel_baseline(i, ext, cfg) == 0.0);
    }
    const StateDerivative rhs = dynamics_rhs(st, topo, cfg);
    for (double d : rhs.ds) CHECK(d == 0.0);
    for (double d : rhs.dv) CHECK(d == 0.0);
}

TEST_CASE("baseline rectifier is a C1 half-rectifier with the stated pieces", "[controller]") {
    const double eps = 0.1;
    CHECK(baseline_g(-1.0, eps) == 0.0);
    CHECK(baseline_g(-eps, eps) == 0.0);
    CHECK(baseline_g(0.0, eps) == Catch::Approx(eps / 2.0).margin(1e-15));
    CHECK(baseline_g(1.0, eps) == Catch::Approx(1.0 + eps / 2.0).margin(1e-15));
    // Quadratic blend on (-eps, 0).
    CHECK(rel_err(baseline_g(-eps / 2.0, eps), eps / 8.0) < 1e-13);
    // C1 at both breakpoints via one-sided differences.
    const double h = 1e-7;
    CHECK(std::abs((baseline_g(-eps + h, eps) - baseline_g(-eps - h, eps)) / (2 * h)) < 1e-6);
    const double left = (baseline_g(-h, eps) - baseline_g(-2 * h, eps)) / h;
    const double right = (baseline_g(2 * h, eps) - baseline_g(h, eps)) / h;
    CHECK(std::abs(left - 1.0) < 1e-5);  // one-sided slopes both approach 1
    CHECK(std::abs(right - 1.0) < 1e-5);
}

TEST_CASE("baseline acceleration matches its gain formula on random states", "[controller]") {
    std::mt19937_64 rng(108);
    ControllerConfig cfg = ring_config();
    cfg.law = ControlLaw::Baseline;
    cfg.baseline_mu_tilde = 0.1;
    cfg.baseline_epsilon = 0.1;
    const RoadTopology topo = RoadTopology::ring(130.0);
    for (int k = 0; k < 300; ++k) {
        const PlatoonState st = testsupport::random_ring_state(rng, 4, 130.0, kPot.L, kSat.v_max);
        const ExtendedSpacings ext = extend(st, topo);
        for (int i = 1; i <= 4; ++i) {
            const size_t ki = static_cast<size_t>(i);
            const double x = potential_d1(ext.sp[ki], kPot) - potential_d1(ext.sp[ki + 1], kPot);
            const double gain = cfg.baseline_mu_tilde +
                                kSat.v_max * baseline_g(x, 0.1) /
                                    (kSat.v_star * (kSat.v_max - kSat.v_star)) -
                                x / kSat.v_star;
            const double expected = -gain * (ext.vx[ki] - kSat.v_star) + x;
            CHECK(rel_err(accel(i, ext, cfg), expected) < 1e-12);
        }
    }
}

TEST_CASE("ring extension derives the lead gap and wraps the speed fringe", "[state]") {
    const PlatoonState st = PlatoonState::make({33.0, 32.0, 27.0}, {31.0, 28.0, 27.0, 30.0});
    const ExtendedSpacings ext = extend(st, RoadTopology::ring(130.0));
    REQUIRE(ext.n == 4);
    CHECK(ext.sp[1] == 38.0);  // 130 - (33 + 32 + 27)
    CHECK(ext.sp[2] == 33.0);
    CHECK(ext.sp[3] == 32.0);
    CHECK(ext.sp[4] == 27.0);
    CHECK(ext.sp[5] == 38.0);  // wraps to the derived lead gap
    CHECK(ext.vx[0] == 30.0);  // predecessor of vehicle 1 is vehicle n
    CHECK(ext.vx[1] == 31.0);
    CHECK(ext.vx[4] == 30.0);
    CHECK(ext.vx[5] == 31.0);  // successor of vehicle n is vehicle 1
}

TEST_CASE("open-road extension uses infinite outer gaps and duplicated fringe speeds", "[state]") {
    const PlatoonState st = PlatoonState::make({19.0, 21.0}, {20.0, 22.0, 24.0});
    const ExtendedSpacings ext = extend(st, RoadTopology::open());
    CHECK(std::isinf(ext.sp[1]));
    CHECK(ext.sp[2] == 19.0);
    CHECK(ext.sp[3] == 21.0);
    CHECK(std::isinf(ext.sp[4]));
    // Phantom speeds duplicate the boundary vehicles so no term becomes 0 * inf.
    CHECK(ext.vx[0] == 20.0);
    CHECK(ext.vx[4] == 24.0);
}

TEST_CASE("state-space membership is strict on every face", "[state]") {
    const ControllerConfig cfg = ring_config();
    const RoadTopology ring = RoadTopology::ring(130.0);
    CHECK(in_state_space(PlatoonState::make({33, 32, 27}, {31, 28, 27, 30}), ring, cfg));
    // Stored spacing at the barrier.
    CHECK_FALSE(in_state_space(PlatoonState::make({5.0, 32, 27}, {31, 28, 27, 30}), ring, cfg));
    // Derived lead gap at the barrier: 130 - 90 - 30 = 10 > 5 ok; push it to 5.
    CHECK_FALSE(in_state_space(PlatoonState::make({60, 35, 30}, {31, 28, 27, 30}), ring, cfg));
    // Speeds on the boundary.
    CHECK_FALSE(in_state_space(PlatoonState::make({33, 32, 27}, {0.0, 28, 27, 30}), ring, cfg));
    CHECK_FALSE(in_state_space(PlatoonState::make({33, 32, 27}, {31, 35.0, 27, 30}), ring, cfg));
    // Open road ignores the ring sum.
    CHECK(in_state_space(PlatoonState::make({60, 35, 30}, {31, 28, 27, 30}), RoadTopology::open(),
                         cfg));
    CHECK_THROWS_AS(
        require_in_state_space(PlatoonState::make({5.0, 32, 27}, {31, 28, 27, 30}), ring, cfg, "t"),
        std::domain_error);
}

TEST_CASE("flat packing round-trips and the derivative wiring is the telescoping chain",
          "[dynamics]") {
    const PlatoonState st = PlatoonState::make({24.0, 26.0}, {18.0, 22.0, 27.0});
    std::vector<double> y;
    pack_state(st, y);
    REQUIRE(y.size() == 5);
    CHECK(y[0] == 24.0);
    CHECK(y[1] == 26.0);
    CHECK(y[2] == 18.0);
    PlatoonState back;
    unpack_state(y, 3, back);
    CHECK(back.s == st.s);
    CHECK(back.v == st.v);

    const ControllerConfig cfg = ring_config();
    const RoadTopology topo = RoadTopology::ring(80.0);
    const StateDerivative rhs = dynamics_rhs(st, topo, cfg);
    REQUIRE(rhs.ds.size() == 2);
    REQUIRE(rhs.dv.size() == 3);
    // d s_i / dt = v_{i-1} - v_i for the stored spacings s_2, s_3.
    CHECK(rhs.ds[0] == 18.0 - 22.0);
    CHECK(rhs.ds[1] == 22.0 - 27.0);
    const ExtendedSpacings ext = extend(st, topo);
    for (int i = 1; i <= 3; ++i)
        CHECK(rhs.dv[static_cast<size_t>(i - 1)] == accel(i, ext, cfg));
}

TEST_CASE("disturbance signal is the windowed cosine with continuous junctions", "[disturbance]") {
    DisturbanceSchedule sched;
    sched.d = 14.0;
    const SaturationSpec sat = SaturationSpec::make(20.0, 35.0);
    sched.validate(sat);
    CHECK(disturbance_signal(0.0, sched, sat) == 20.0);
    CHECK(rel_err(disturbance_signal(kPi, sched, sat), 20.0 + 14.0 * std::cos(kPi)) < 1e-15);
    CHECK(disturbance_signal(kPi, sched, sat) < 20.0);
    // Continuity at both window edges.
    CHECK(std::abs(disturbance_signal(kPi / 2.0 - 1e-9, sched, sat) -
                   disturbance_signal(kPi / 2.0 + 1e-9, sched, sat)) < 1e-7);
    CHECK(std::abs(disturbance_signal(5.0 * kPi / 2.0 - 1e-9, sched, sat) -
                   disturbance_signal(5.0 * kPi / 2.0 + 1e-9, sched, sat)) < 1e-7);
    CHECK(disturbance_signal(100.0, sched, sat) == 20.0);

    DisturbanceSchedule bad;
    bad.d = 15.0;  // hits zero speed for v_star = 20... amplitude cap is min(20, 15)
    CHECK_THROWS_AS(bad.validate(sat), std::invalid_argument);
    bad.d = 0.0;
    CHECK_THROWS_AS(bad.validate(sat), std::invalid_argument);
}

TEST_CASE("a prescribed vehicle 1 bypasses its controller and feeds both adjacent gaps",
          "[disturbance]") {
    ControllerConfig cfg = ring_config();
    cfg.saturation = SaturationSpec::make(20.0, 35.0);
    const RoadTopology topo = RoadTopology::ring(130.0);
    const PlatoonState st =
        PlatoonState::make({26.0, 22.0, 20.0, 24.0, 21.0}, {20.0, 19.0, 21.0, 20.0, 22.0, 18.0});
    DisturbanceSchedule sched;
    sched.d = 14.0;
    const double t = kPi;  // deep inside the window
    const double v1 = disturbance_signal(t, sched, cfg.saturation);

    const StateDerivative rhs = dynamics_rhs(st, topo, cfg, t, &sched);
    CHECK(rhs.dv[0] == 0.0);            // stored v_1 slot is frozen
    CHECK(rhs.ds[0] == v1 - 19.0);      // gap behind vehicle 1 opens with the signal
    // The wrapped gap (derived s_1) is driven through vehicle n's row: its
    // spacing derivative is v_n-ahead = prescribed v_1 on the ring; visible
    // through the controlled accelerations instead, so check a neighbor's
    // coupling shifted by the prescribed speed.
    PlatoonState shifted = st;
    shifted.v[0] = v1;
    const ExtendedSpacings ext = extend(shifted, topo);
    for (int i = 2; i <= 6; ++i)
        CHECK(rhs.dv[static_cast<size_t>(i - 1)] == accel(i, ext, cfg));
}

TEST_CASE("topology and platoon validation reject malformed setups", "[state]") {
    CHECK_THROWS_AS(RoadTopology::ring(0.0).validate(2, 5.0), std::invalid_argument);
    CHECK_THROWS_AS(RoadTopology::ring(10.0).validate(4, 5.0), std::invalid_argument);
    CHECK_NOTHROW(RoadTopology::open().validate(4, 5.0));
    CHECK_THROWS_AS(PlatoonState::make({1.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(PlatoonState::make({}, {1.0}), std::invalid_argument);
    ControllerConfig cfg = ring_config();
    cfg.mu = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = ring_config();
    cfg.potential.q = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = ring_config();
    cfg.potential.lam = cfg.potential.L;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
