#pragma once

#include <stdexcept>
#include <vector>

#include "failsafe/geometry.hpp"

namespace failsafe {

/// Admissible motion envelope of another agent: symmetric acceleration limits
/// per axis plus absolute velocity caps (vMinLong may be negative to allow
/// reversing; vMaxLat caps |vy|).
struct MotionBounds {
    double aMaxLong{0.0};
    double aMaxLat{0.0};
    double vMaxLong{0.0};
    double vMinLong{0.0};
    double vMaxLat{0.0};
};

struct EgoState {
    double px{0.0}, py{0.0};
    double vx{0.0}, vy{0.0};
    double halfLen{1.0}, halfWid{1.0};

    Box2 box() const {
        return {Interval{px - halfLen, px + halfLen}, Interval{py - halfWid, py + halfWid}};
    }
};

struct AgentState {
    double px{0.0}, py{0.0};
    double vx{0.0}, vy{0.0};
    double halfLen{1.0}, halfWid{1.0};
    MotionBounds bounds;

    Box2 box() const {
        return {Interval{px - halfLen, px + halfLen}, Interval{py - halfWid, py + halfWid}};
    }
};

struct RoadBounds {
    double yMin{0.0};
    double yMax{0.0};
    double laneWidth{3.5};
};

/// Ego acceleration limits used by the fallback maneuver generators.
struct EgoLimits {
    double aMaxLong{0.0};
    double aMaxLat{0.0};
};

enum class DrivingDirection { PlusX, MinusX };

struct Scenario {
    RoadBounds road;
    EgoState ego;
    EgoLimits egoLimits;
    std::vector<AgentState> others;
    double dt{0.1};
    int horizon{1};  // number of action stages; states run 0..horizon
    Box2 actionBox;
    DrivingDirection direction{DrivingDirection::PlusX};
};

inline void validate(const Scenario& s) {
    if (s.road.yMin >= s.road.yMax) throw std::invalid_argument("scenario: yMin >= yMax");
    if (s.dt <= 0.0) throw std::invalid_argument("scenario: dt must be positive");
    if (s.horizon < 1) throw std::invalid_argument("scenario: horizon must be >= 1");
    if (s.ego.halfLen <= 0.0 || s.ego.halfWid <= 0.0)
        throw std::invalid_argument("scenario: ego extents must be positive");
    if (s.egoLimits.aMaxLong < 0.0 || s.egoLimits.aMaxLat < 0.0)
        throw std::invalid_argument("scenario: ego acceleration limits must be >= 0");
    for (const auto& o : s.others) {
        if (o.halfLen <= 0.0 || o.halfWid <= 0.0)
            throw std::invalid_argument("scenario: agent extents must be positive");
        if (o.bounds.aMaxLong < 0.0 || o.bounds.aMaxLat < 0.0)
            throw std::invalid_argument("scenario: agent aMax must be >= 0");
        if (o.bounds.vMinLong > o.bounds.vMaxLong)
            throw std::invalid_argument("scenario: agent vMinLong > vMaxLong");
    }
}

/// True when the agent's box is entirely behind the ego's box along the
/// driving direction (strict gap; a vehicle alongside is not behind).
inline bool strictly_behind(const EgoState& ego, const AgentState& agent,
                            DrivingDirection dir) {
    if (dir == DrivingDirection::PlusX) {
        return agent.px + agent.halfLen < ego.px - ego.halfLen;
    }
    return agent.px - agent.halfLen > ego.px + ego.halfLen;
}

}  // namespace failsafe
