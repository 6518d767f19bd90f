#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "failsafe/dynamics.hpp"
#include "failsafe/geometry.hpp"
#include "failsafe/maneuvers.hpp"
#include "failsafe/scenario.hpp"

namespace failsafe {

/// Magnitude of the clearance floor: with nothing around, the momentary cost
/// saturates at -kClearanceFloor instead of -infinity.
inline constexpr double kClearanceFloor = 1e6;

/// Momentary safety cost d: minus the minimum signed l_inf clearance of the
/// ego box to the obstacle boxes and to the road boundaries. d <= 0 iff the
/// state is momentarily collision-free; positive values measure penetration
/// depth. Infinite road bounds are allowed and simply drop that term.
inline double momentary_cost(const Box2& ego, std::span<const Box2> obstacles,
                             const RoadBounds& road, double clearanceFloor = kClearanceFloor) {
    double minClear = std::numeric_limits<double>::infinity();
    for (const Box2& o : obstacles) minClear = std::min(minClear, box_gap_linf(ego, o));
    if (std::isfinite(road.yMax)) minClear = std::min(minClear, road.yMax - ego.y.hi);
    if (std::isfinite(road.yMin)) minClear = std::min(minClear, ego.y.lo - road.yMin);
    return std::max(-minClear, -clearanceFloor);
}

/// Which fallback continuations total_safety_cost searches over.
struct CandidateSet {
    bool brake{true};
    bool evasiveLeft{true};
    bool evasiveRight{true};

    static CandidateSet all() { return {}; }
    static CandidateSet brakeOnly() { return {true, false, false}; }
};

/// Outcome of the min-max safety evaluation of one action: the total safety
/// cost w (negative certifies the action as safe against all admissible
/// adversary behaviors), the fallback attaining it, and the stage (absolute
/// state index) where that fallback's worst clearance occurs.
struct SafetyVerdict {
    double w{0.0};
    FallbackManeuver bestFallback;
    int worstStage{0};
};

namespace detail {

inline std::vector<const AgentState*> relevant_others(const Scenario& sc) {
    std::vector<const AgentState*> out;
    out.reserve(sc.others.size());
    for (const AgentState& o : sc.others) {
        if (!strictly_behind(sc.ego, o, sc.direction)) out.push_back(&o);
    }
    return out;
}

}  // namespace detail

/// Total safety cost (to go) of taking `action` at stage t: execute the
/// action for one step, then evaluate each candidate fallback against the
/// worst-case reach tubes of all other agents, taking the max momentary cost
/// over stages t+1..horizon and the min over candidates. Agents strictly
/// behind the ego at stage t are ignored. Infeasible evasive candidates are
/// dropped; throws if no candidate is feasible.
inline SafetyVerdict total_safety_cost(const Scenario& sc, int t, const Vec2& action,
                                       const CandidateSet& cands = CandidateSet::all()) {
    if (t < 0 || t >= sc.horizon) throw std::domain_error("total_safety_cost: stage out of range");
    if (!sc.actionBox.contains(action))
        throw std::domain_error("total_safety_cost: action outside action box");

    const int H = sc.horizon - t;       // future states t+1 .. horizon
    const int Hf = H - 1;               // fallback steps after the action step
    EgoState postAction = step_double_integrator(sc.ego, action, sc.dt);

    auto others = detail::relevant_others(sc);
    std::vector<ReachTube> tubes;
    tubes.reserve(others.size());
    for (const AgentState* o : others) tubes.push_back(reach_tube(*o, H, sc.dt, sc.road));

    std::vector<FallbackManeuver> candidates;
    if (cands.brake) candidates.push_back(brake_maneuver(postAction, sc.egoLimits, Hf, sc.dt));
    if (cands.evasiveLeft) {
        try {
            candidates.push_back(
                evasive_maneuver(postAction, sc.egoLimits, sc.road.laneWidth, Hf, sc.dt));
        } catch (const InfeasibleManeuver&) {
        }
    }
    if (cands.evasiveRight) {
        try {
            candidates.push_back(
                evasive_maneuver(postAction, sc.egoLimits, -sc.road.laneWidth, Hf, sc.dt));
        } catch (const InfeasibleManeuver&) {
        }
    }
    if (candidates.empty()) throw std::runtime_error("total_safety_cost: no feasible fallback");

    std::vector<Box2> stageObstacles(others.size());
    std::optional<SafetyVerdict> best;
    for (FallbackManeuver& m : candidates) {
        double wMax = -std::numeric_limits<double>::infinity();
        int worst = t + 1;
        const EgoState* state = &postAction;
        for (int k = 0; k < H; ++k) {
            for (size_t i = 0; i < others.size(); ++i) stageObstacles[i] = tubes[i].perStep[k];
            double d = momentary_cost(state->box(), stageObstacles, sc.road);
            if (d > wMax) {
                wMax = d;
                worst = t + 1 + k;
            }
            if (k < Hf) state = &m.egoTrajectory[static_cast<size_t>(k)];
        }
        if (!best || wMax < best->w) best = SafetyVerdict{wMax, std::move(m), worst};
    }
    return *best;
}

/// Convenience accessor when only the cost value is needed.
inline double total_safety_cost_value(const Scenario& sc, int t, const Vec2& action,
                                      const CandidateSet& cands = CandidateSet::all()) {
    return total_safety_cost(sc, t, action, cands).w;
}

/// Pragmatic Lipschitz bound on a -> w(s, a) for this instantiation, used as
/// a rigorous certification constant: the momentary cost moves at most
/// 2x the ego position shift (l_inf), and the position at any future stage
/// moves at most dt^2/2 + dt * tau per unit action change, tau bounded by
/// the remaining maneuver time and the time to null the induced velocity.
inline double certification_gamma(const Scenario& sc, int t) {
    const double dt = sc.dt;
    const int Hf = sc.horizon - t - 1;
    double tauLong = Hf * dt;
    if (sc.egoLimits.aMaxLong > 0.0) {
        double vPeak = std::abs(sc.ego.vx) +
                       std::max(std::abs(sc.actionBox.x.lo), std::abs(sc.actionBox.x.hi)) * dt;
        tauLong = std::min(tauLong, vPeak / sc.egoLimits.aMaxLong + dt);
    }
    double lLong = 0.5 * dt * dt + dt * std::max(tauLong, 0.0);
    double lLat = 0.5 * dt * dt + 2.0 * dt * dt;  // vy-null drift + rescaled profile
    return 2.0 * std::max(lLong, lLat);
}

}  // namespace failsafe
