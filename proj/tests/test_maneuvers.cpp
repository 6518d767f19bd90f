#include <catch2/catch_amalgamated.hpp>

#include "failsafe/maneuvers.hpp"
#include "helpers.hpp"

using namespace failsafe;

namespace {
const EgoLimits kLimits{5.0, 1.0};
}

TEST_CASE("brake stops exactly and holds") {
    EgoState ego{0.0, 0.0, 10.0, 0.0, 1.0, 1.0};
    FallbackManeuver m = brake_maneuver(ego, kLimits, 5, 1.0);
    CHECK(m.accelSeq[0].x == -5.0);
    CHECK(m.accelSeq[1].x == -5.0);
    CHECK(m.accelSeq[2].x == 0.0);
    CHECK(m.egoTrajectory[1].vx == Catch::Approx(0.0).margin(1e-15));
    CHECK(m.egoTrajectory[1].px == Catch::Approx(10.0));
    CHECK(m.egoTrajectory[4].px == Catch::Approx(10.0));  // holds after stopping
}

TEST_CASE("brake partial final step") {
    EgoState ego{0.0, 0.0, 9.0, 0.0, 1.0, 1.0};
    FallbackManeuver m = brake_maneuver(ego, kLimits, 4, 1.0);
    CHECK(m.accelSeq[0].x == Catch::Approx(-5.0));
    CHECK(m.accelSeq[1].x == Catch::Approx(-4.0));
    CHECK(m.accelSeq[2].x == 0.0);
    CHECK(m.egoTrajectory[1].vx == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("brake from rest is the zero maneuver") {
    EgoState ego{0.0, 0.0, 0.0, 0.0, 1.0, 1.0};
    FallbackManeuver m = brake_maneuver(ego, kLimits, 3, 0.5);
    for (const Vec2& a : m.accelSeq) {
        CHECK(a.x == 0.0);
        CHECK(a.y == 0.0);
    }
}

TEST_CASE("brake respects the horizon when too short to stop") {
    EgoState ego{0.0, 0.0, 30.0, 0.0, 1.0, 1.0};
    FallbackManeuver m = brake_maneuver(ego, kLimits, 3, 1.0);
    for (const Vec2& a : m.accelSeq) CHECK(a.x == -5.0);
    CHECK(m.egoTrajectory.back().vx == Catch::Approx(15.0));
}

TEST_CASE("evasive rest-to-rest bang-bang") {
    EgoState ego{0.0, 0.0, 0.0, 0.0, 1.0, 1.0};
    FallbackManeuver m = evasive_maneuver(ego, kLimits, 4.0, 6, 1.0);
    CHECK(m.kind == ManeuverKind::EvasiveLeft);
    CHECK(m.accelSeq[0].y == Catch::Approx(1.0));
    CHECK(m.accelSeq[1].y == Catch::Approx(1.0));
    CHECK(m.accelSeq[2].y == Catch::Approx(-1.0));
    CHECK(m.accelSeq[3].y == Catch::Approx(-1.0));
    CHECK(m.egoTrajectory[3].py == Catch::Approx(4.0));
    CHECK(m.egoTrajectory[3].vy == Catch::Approx(0.0).margin(1e-15));
    CHECK(m.egoTrajectory.back().py == Catch::Approx(4.0));
}

TEST_CASE("evasive zero offset is the identity maneuver") {
    EgoState ego{0.0, 0.0, 0.0, 0.0, 1.0, 1.0};
    FallbackManeuver m = evasive_maneuver(ego, kLimits, 0.0, 4, 1.0);
    for (const Vec2& a : m.accelSeq) CHECK(a.y == 0.0);
}

TEST_CASE("evasive infeasible within horizon") {
    EgoState ego{0.0, 0.0, 0.0, 0.0, 1.0, 1.0};
    CHECK_THROWS_AS(evasive_maneuver(ego, kLimits, 4.0, 3, 1.0), InfeasibleManeuver);
    CHECK(evasive_min_steps(0.0, 4.0, kLimits, 1.0) == 4);
}

TEST_CASE("evasive terminal conditions are exact for random offsets") {
    testutil::Rng rng(5150);
    for (int trial = 0; trial < 300; ++trial) {
        EgoLimits lim{rng.uniform(1.0, 6.0), rng.uniform(0.5, 3.0)};
        double dt = rng.uniform(0.1, 0.5);
        double offset = rng.uniform(-5.0, 5.0);
        double vy = rng.uniform(-1.0, 1.0);
        EgoState ego{0.0, rng.uniform(-2.0, 2.0), rng.uniform(0.0, 10.0), vy, 1.0, 1.0};
        int need = evasive_min_steps(vy, offset, lim, dt);
        REQUIRE(need >= 0);
        int H = need + rng.uniformInt(0, 3);
        FallbackManeuver m = evasive_maneuver(ego, lim, offset, H, dt);
        CHECK(m.egoTrajectory.back().py == Catch::Approx(ego.py + offset).margin(1e-9));
        CHECK(m.egoTrajectory.back().vy == Catch::Approx(0.0).margin(1e-9));
        for (const Vec2& a : m.accelSeq) {
            CHECK(std::abs(a.x) <= lim.aMaxLong + 1e-9);
            CHECK(std::abs(a.y) <= lim.aMaxLat + 1e-9);
        }
    }
}

TEST_CASE("brake acceleration bounds hold for random states") {
    testutil::Rng rng(71);
    for (int trial = 0; trial < 200; ++trial) {
        EgoLimits lim{rng.uniform(0.5, 6.0), rng.uniform(0.2, 3.0)};
        double dt = rng.uniform(0.1, 0.6);
        EgoState ego{0.0, 0.0, rng.uniform(-15.0, 15.0), rng.uniform(-2.0, 2.0), 1.0, 1.0};
        FallbackManeuver m = brake_maneuver(ego, lim, 12, dt);
        for (const Vec2& a : m.accelSeq) {
            CHECK(std::abs(a.x) <= lim.aMaxLong + 1e-9);
            CHECK(std::abs(a.y) <= lim.aMaxLat + 1e-9);
        }
        // velocity is driven to zero and stays there when the horizon allows
        if (std::abs(ego.vx) / (lim.aMaxLong * dt) < 11.0) {
            CHECK(m.egoTrajectory.back().vx == Catch::Approx(0.0).margin(1e-9));
        }
    }
}
