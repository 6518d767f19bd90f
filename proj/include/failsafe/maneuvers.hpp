#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "failsafe/dynamics.hpp"
#include "failsafe/scenario.hpp"

namespace failsafe {

struct InfeasibleManeuver : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ManeuverKind { Brake, EvasiveLeft, EvasiveRight };

inline const char* to_string(ManeuverKind k) {
    switch (k) {
        case ManeuverKind::Brake: return "brake";
        case ManeuverKind::EvasiveLeft: return "evasive-left";
        case ManeuverKind::EvasiveRight: return "evasive-right";
    }
    return "?";
}

/// A fixed fallback continuation: per-step accelerations and the resulting
/// ego states (state k is reached after executing accelSeq[k]).
struct FallbackManeuver {
    ManeuverKind kind{ManeuverKind::Brake};
    std::vector<Vec2> accelSeq;
    std::vector<EgoState> egoTrajectory;
};

namespace detail {

/// Acceleration schedule that drives a velocity to exactly zero at maximum
/// rate: full steps at -sign(v)*aMax, then one scaled partial step. If the
/// horizon is too short the schedule decelerates throughout.
inline std::vector<double> stop_profile(double v, double aMax, int H, double dt) {
    std::vector<double> accels(static_cast<size_t>(H), 0.0);
    if (H == 0 || v == 0.0) return accels;
    if (aMax <= 0.0) return accels;  // cannot decelerate
    double sign = v > 0.0 ? 1.0 : -1.0;
    double mag = std::abs(v);
    int nFull = static_cast<int>(std::floor(mag / (aMax * dt)));
    double residual = mag - nFull * aMax * dt;
    for (int k = 0; k < H; ++k) {
        if (k < nFull) {
            accels[static_cast<size_t>(k)] = -sign * aMax;
        } else if (k == nFull && residual > 0.0) {
            accels[static_cast<size_t>(k)] = -sign * residual / dt;
        } else {
            break;
        }
    }
    return accels;
}

/// Number of nonzero steps in a stop profile.
inline int stop_steps(double v, double aMax, double dt) {
    if (v == 0.0) return 0;
    if (aMax <= 0.0) return 0;
    double mag = std::abs(v);
    int nFull = static_cast<int>(std::floor(mag / (aMax * dt)));
    double residual = mag - nFull * aMax * dt;
    return nFull + (residual > 0.0 ? 1 : 0);
}

inline FallbackManeuver roll_out(ManeuverKind kind, const EgoState& ego,
                                 std::vector<double> ax, std::vector<double> ay, double dt) {
    FallbackManeuver m;
    m.kind = kind;
    size_t H = ax.size();
    m.accelSeq.reserve(H);
    m.egoTrajectory.reserve(H);
    EgoState s = ego;
    for (size_t k = 0; k < H; ++k) {
        Vec2 a{ax[k], ay[k]};
        s = step_double_integrator(s, a, dt);
        m.accelSeq.push_back(a);
        m.egoTrajectory.push_back(s);
    }
    return m;
}

}  // namespace detail

/// Emergency brake: longitudinal full deceleration to standstill (scaled
/// final step reaches vx = 0 exactly), lateral velocity nulled in minimum
/// time, then the lane is held.
inline FallbackManeuver brake_maneuver(const EgoState& ego, const EgoLimits& limits, int H,
                                       double dt) {
    auto ax = detail::stop_profile(ego.vx, limits.aMaxLong, H, dt);
    auto ay = detail::stop_profile(ego.vy, limits.aMaxLat, H, dt);
    return detail::roll_out(ManeuverKind::Brake, ego, std::move(ax), std::move(ay), dt);
}

/// Steps needed by evasive_maneuver for the given start velocity and offset.
inline int evasive_min_steps(double vy, double targetOffset, const EgoLimits& limits,
                             double dt) {
    int n0 = detail::stop_steps(vy, limits.aMaxLat, dt);
    // Drift accumulated while nulling vy.
    double drift = 0.0;
    {
        auto prof = detail::stop_profile(vy, limits.aMaxLat, n0, dt);
        double v = vy;
        for (double a : prof) {
            drift += v * dt + 0.5 * a * dt * dt;
            v += a * dt;
        }
    }
    double rem = targetOffset - drift;
    if (rem == 0.0) return n0;
    if (limits.aMaxLat <= 0.0) return -1;  // unreachable
    int n = static_cast<int>(std::ceil(std::sqrt(std::abs(rem) / limits.aMaxLat) / dt));
    return n0 + 2 * std::max(n, 1);
}

/// Shortest-time lateral relocation by targetOffset with zero terminal
/// lateral velocity, while braking longitudinally. Lateral plan: null the
/// initial lateral velocity, then a rest-to-rest bang-bang +a1 for n steps
/// and -a1 for n steps, n the minimum-time step count rounded up and a1
/// scaled down so the terminal offset is exact.
inline FallbackManeuver evasive_maneuver(const EgoState& ego, const EgoLimits& limits,
                                         double targetOffset, int H, double dt) {
    ManeuverKind kind = targetOffset >= 0.0 ? ManeuverKind::EvasiveLeft : ManeuverKind::EvasiveRight;
    std::vector<double> ay(static_cast<size_t>(H), 0.0);

    int n0 = detail::stop_steps(ego.vy, limits.aMaxLat, dt);
    auto phase0 = detail::stop_profile(ego.vy, limits.aMaxLat, std::min(n0, H), dt);
    double drift = 0.0, v = ego.vy;
    for (size_t k = 0; k < phase0.size(); ++k) {
        ay[k] = phase0[k];
        drift += v * dt + 0.5 * phase0[k] * dt * dt;
        v += phase0[k] * dt;
    }
    double rem = targetOffset - drift;
    if (rem != 0.0) {
        if (limits.aMaxLat <= 0.0) {
            throw InfeasibleManeuver("evasive_maneuver: zero lateral authority");
        }
        int n = std::max(1, static_cast<int>(
                                std::ceil(std::sqrt(std::abs(rem) / limits.aMaxLat) / dt)));
        if (n0 + 2 * n > H) {
            throw InfeasibleManeuver("evasive_maneuver: offset unreachable within horizon (" +
                                     std::to_string(n0 + 2 * n) + " steps > " +
                                     std::to_string(H) + ")");
        }
        double a1 = rem / (static_cast<double>(n) * dt * static_cast<double>(n) * dt);
        for (int k = 0; k < n; ++k) ay[static_cast<size_t>(n0 + k)] = a1;
        for (int k = 0; k < n; ++k) ay[static_cast<size_t>(n0 + n + k)] = -a1;
    } else if (n0 > H) {
        throw InfeasibleManeuver("evasive_maneuver: cannot null lateral velocity within horizon");
    }

    auto ax = detail::stop_profile(ego.vx, limits.aMaxLong, H, dt);
    return detail::roll_out(kind, ego, std::move(ax), std::move(ay), dt);
}

}  // namespace failsafe
