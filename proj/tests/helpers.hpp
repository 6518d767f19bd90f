#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "failsafe/maneuvers.hpp"
#include "failsafe/rollout.hpp"
#include "failsafe/safety_cost.hpp"
#include "failsafe/scenario.hpp"

namespace testutil {

using namespace failsafe;

struct Rng {
    std::mt19937_64 engine;
    explicit Rng(std::uint64_t seed) : engine(seed) {}

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * ((static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53);
    }
    int uniformInt(int lo, int hi) {  // inclusive
        return lo + static_cast<int>(engine() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }
};

/// Rest-to-rest phase step count of the evasive plan for a given start
/// lateral velocity; used to reject scenarios whose action box straddles a
/// step-count threshold (the total cost is Lipschitz only within one band).
inline int evasive_phase_steps(double vy, double offset, const EgoLimits& lim, double dt) {
    int n0 = failsafe::detail::stop_steps(vy, lim.aMaxLat, dt);
    return evasive_min_steps(vy, offset, lim, dt) - n0;
}

inline bool evasive_bands_constant(const Scenario& sc) {
    const double dt = sc.dt;
    int refL = -1, refR = -1;
    for (double ay : {sc.actionBox.y.lo, 0.0, sc.actionBox.y.hi}) {
        double vy1 = sc.ego.vy + ay * dt;
        int nL = evasive_phase_steps(vy1, sc.road.laneWidth, sc.egoLimits, dt);
        int nR = evasive_phase_steps(vy1, -sc.road.laneWidth, sc.egoLimits, dt);
        if (refL < 0) {
            refL = nL;
            refR = nR;
        } else if (nL != refL || nR != refR) {
            return false;
        }
    }
    return true;
}

inline bool evasives_always_feasible(const Scenario& sc, int t) {
    int Hf = sc.horizon - t - 1;
    for (double ay : {sc.actionBox.y.lo, 0.0, sc.actionBox.y.hi}) {
        double vy1 = sc.ego.vy + ay * sc.dt;
        for (double off : {sc.road.laneWidth, -sc.road.laneWidth}) {
            int need = evasive_min_steps(vy1, off, sc.egoLimits, sc.dt);
            if (need < 0 || need > Hf) return false;
        }
    }
    return true;
}

/// Randomized three-lane highway scenario for certification tests: ego at
/// rest laterally, a few slower vehicles ahead. Rejection sampling keeps the
/// evasive plans feasible and within one step-count band over the whole
/// action box, so the Lipschitz certificate is rigorous.
inline Scenario random_certification_scenario(Rng& rng) {
    for (int attempt = 0; attempt < 200; ++attempt) {
        Scenario sc;
        sc.road = {-5.25, 5.25, 3.5};
        sc.dt = 0.2;
        sc.horizon = rng.uniformInt(18, 22);
        sc.actionBox = {Interval{-4.0, 4.0}, Interval{-2.0, 2.0}};
        sc.direction = DrivingDirection::PlusX;
        sc.egoLimits = {5.0, 2.0};
        sc.ego = {0.0, rng.uniform(-0.3, 0.3), rng.uniform(8.0, 14.0), 0.0, 2.25, 0.9};

        int nOthers = rng.uniformInt(0, 3);
        double lanes[3] = {-3.5, 0.0, 3.5};
        for (int i = 0; i < nOthers; ++i) {
            AgentState o;
            o.px = rng.uniform(20.0, 70.0);
            o.py = lanes[rng.uniformInt(0, 2)];
            o.vx = rng.uniform(0.0, 12.0);
            o.vy = 0.0;
            o.halfLen = 2.25;
            o.halfWid = 0.9;
            o.bounds = {rng.uniform(1.0, 3.0), rng.uniform(0.3, 1.0), 20.0, 0.0, 1.0};
            sc.others.push_back(o);
        }

        if (!evasives_always_feasible(sc, 0)) continue;
        if (!evasive_bands_constant(sc)) continue;
        std::vector<Box2> boxes;
        for (const auto& o : sc.others) boxes.push_back(o.box());
        if (momentary_cost(sc.ego.box(), boxes, sc.road) >= 0.0) continue;
        return sc;
    }
    throw std::runtime_error("random_certification_scenario: rejection sampling failed");
}

/// Road-corridor-only scenario on which the total safety cost with a
/// brake-only candidate set is exactly convex (piecewise affine) in the
/// action: no obstacles, ego laterally at rest, lateral action authority
/// within the single-step stopping range.
inline Scenario random_convex_scenario(Rng& rng) {
    Scenario sc;
    double halfRoad = rng.uniform(1.5, 3.0);
    sc.road = {-halfRoad, halfRoad, 3.5};
    sc.dt = 0.25;
    sc.horizon = rng.uniformInt(4, 10);
    sc.actionBox = {Interval{-4.0, 4.0}, Interval{-2.0, 2.0}};
    sc.direction = DrivingDirection::PlusX;
    sc.egoLimits = {5.0, 2.0};
    sc.ego = {0.0, rng.uniform(-0.4, 0.4), rng.uniform(5.0, 12.0), 0.0, 2.25, 0.9};
    return sc;
}

/// Synthetic admissible adversary track: integrates the clipped agent
/// dynamics under random accelerations strictly inside the bounds, with a
/// bias toward hard braking to make the replay adversarial.
inline AgentTrack synth_adversarial_track(const AgentState& agent, const RoadBounds& road, int T,
                                          double dt, Rng& rng) {
    AgentTrack track;
    AgentState s = agent;
    track.pos.push_back({s.px, s.py});
    track.vel.push_back({s.vx, s.vy});
    int brakeFrom = rng.uniformInt(0, std::max(0, T / 2));
    for (int t = 0; t < T; ++t) {
        double ax = t >= brakeFrom ? -0.9 * s.bounds.aMaxLong
                                   : rng.uniform(-0.5, 0.5) * s.bounds.aMaxLong;
        double ay = rng.uniform(-0.5, 0.5) * s.bounds.aMaxLat;
        s = agent_step(s, {ax, ay}, dt, road);
        track.pos.push_back({s.px, s.py});
        track.vel.push_back({s.vx, s.vy});
    }
    return track;
}

/// Certification scenario wrapped for replay, with adversarial recorded
/// tracks and a constant-velocity ego reference.
inline ReplayScenario random_adversarial_replay(Rng& rng) {
    ReplayScenario rs;
    rs.scenario = random_certification_scenario(rng);
    const Scenario& sc = rs.scenario;
    for (const AgentState& o : sc.others) {
        rs.tracks.push_back(synth_adversarial_track(o, sc.road, sc.horizon, sc.dt, rng));
    }
    for (int t = 0; t <= sc.horizon; ++t) {
        rs.egoReference.push_back({sc.ego.px + sc.ego.vx * sc.dt * t, sc.ego.py});
    }
    return rs;
}

/// Brute-force max of w over a dense nx-by-ny sample of a box (inclusive of
/// the boundary).
inline double dense_max_w(const Scenario& sc, int t, const Box2& box, int n,
                          const CandidateSet& cands) {
    double wMax = -1e300;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            Vec2 a{box.x.lo + box.x.width() * i / (n - 1), box.y.lo + box.y.width() * j / (n - 1)};
            wMax = std::max(wMax, total_safety_cost_value(sc, t, a, cands));
        }
    }
    return wMax;
}

}  // namespace testutil
