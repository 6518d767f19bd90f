#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "failsafe/geometry.hpp"
#include "failsafe/scenario.hpp"

namespace failsafe {

/// One exact zero-order-hold step of the component-wise double integrator:
/// per axis, p' = p + v dt + a dt^2 / 2 and v' = v + a dt.
inline EgoState step_double_integrator(const EgoState& s, const Vec2& accel, double dt) {
    EgoState n = s;
    n.px = s.px + s.vx * dt + 0.5 * accel.x * dt * dt;
    n.py = s.py + s.vy * dt + 0.5 * accel.y * dt * dt;
    n.vx = s.vx + accel.x * dt;
    n.vy = s.vy + accel.y * dt;
    return n;
}

/// One step of another agent's axis dynamics under a commanded acceleration,
/// with the velocity clipped to its caps. The position advance uses the
/// effective (clipped) velocity change, which keeps the step monotone in
/// (p, v, a) per axis.
inline void agent_axis_step(double& p, double& v, double accel, double dt, double vMin,
                            double vMax) {
    double vNew = std::clamp(v + accel * dt, vMin, vMax);
    p += 0.5 * (v + vNew) * dt;
    v = vNew;
}

/// One full agent step; lateral position additionally clamped so the body
/// stays within the road.
inline AgentState agent_step(const AgentState& a, const Vec2& accel, double dt,
                             const RoadBounds& road) {
    AgentState n = a;
    agent_axis_step(n.px, n.vx, accel.x, dt, a.bounds.vMinLong, a.bounds.vMaxLong);
    agent_axis_step(n.py, n.vy, accel.y, dt, -a.bounds.vMaxLat, a.bounds.vMaxLat);
    double lo = road.yMin + a.halfWid, hi = road.yMax - a.halfWid;
    if (lo <= hi) n.py = std::clamp(n.py, lo, hi);
    return n;
}

/// Worst-case occupancy rectangles of one agent at steps 1..H ahead.
/// perStep[k] contains the agent body under every admissible acceleration
/// sequence after k+1 steps; rectangles are inflated by the agent half
/// extents plus an optional extra margin.
struct ReachTube {
    std::vector<Box2> perStep;
    double inflation{0.0};
};

inline ReachTube reach_tube(const AgentState& agent, int H, double dt, const RoadBounds& road,
                            double extraMargin = 0.0) {
    ReachTube tube;
    tube.inflation = extraMargin;
    tube.perStep.reserve(static_cast<size_t>(H));

    double pxLo = agent.px, pxHi = agent.px, vxLo = agent.vx, vxHi = agent.vx;
    double pyLo = agent.py, pyHi = agent.py, vyLo = agent.vy, vyHi = agent.vy;
    const MotionBounds& b = agent.bounds;
    double bandLo = road.yMin + agent.halfWid, bandHi = road.yMax - agent.halfWid;

    for (int k = 0; k < H; ++k) {
        agent_axis_step(pxLo, vxLo, -b.aMaxLong, dt, b.vMinLong, b.vMaxLong);
        agent_axis_step(pxHi, vxHi, +b.aMaxLong, dt, b.vMinLong, b.vMaxLong);
        agent_axis_step(pyLo, vyLo, -b.aMaxLat, dt, -b.vMaxLat, b.vMaxLat);
        agent_axis_step(pyHi, vyHi, +b.aMaxLat, dt, -b.vMaxLat, b.vMaxLat);
        if (bandLo <= bandHi) {
            pyLo = std::clamp(pyLo, bandLo, bandHi);
            pyHi = std::clamp(pyHi, bandLo, bandHi);
        }
        Box2 occ{Interval{pxLo - agent.halfLen - extraMargin, pxHi + agent.halfLen + extraMargin},
                 Interval{pyLo - agent.halfWid - extraMargin, pyHi + agent.halfWid + extraMargin}};
        tube.perStep.push_back(occ);
    }
    return tube;
}

/// Lipschitz data for the total-safety-cost certificate: alpha bounds the
/// momentary cost in the state, beta the one-step closed-loop dynamics.
struct LipschitzBudget {
    double alpha{0.0};
    double beta{0.0};
    int horizon{1};
};

inline double lipschitz_gamma(const LipschitzBudget& b) {
    return b.alpha * std::max(1.0, std::pow(b.beta, b.horizon));
}

}  // namespace failsafe
