#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "failsafe/safe_set.hpp"
#include "failsafe/safety_cost.hpp"
#include "failsafe/safety_layer.hpp"
#include "failsafe/scenario.hpp"

namespace failsafe {

struct InitiallyUnsafeScenario : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Recorded positions/velocities of one agent, aligned with stages 0..T.
/// Replay beyond the track end extrapolates at constant velocity.
struct AgentTrack {
    std::vector<Vec2> pos;
    std::vector<Vec2> vel;
};

/// A scenario plus the recorded motion of the other agents (open-loop
/// replay) and an optional reference ego trajectory for displacement errors.
struct ReplayScenario {
    Scenario scenario;
    std::vector<AgentTrack> tracks;   // per agent; empty track = constant velocity
    std::vector<Vec2> egoReference;   // positions at stages 0.., may be empty
};

inline AgentState agent_at(const ReplayScenario& rs, size_t agent, int t) {
    AgentState s = rs.scenario.others[agent];
    const AgentTrack& tr = agent < rs.tracks.size() ? rs.tracks[agent] : AgentTrack{};
    if (tr.pos.empty()) {
        s.px += s.vx * rs.scenario.dt * t;
        s.py += s.vy * rs.scenario.dt * t;
        return s;
    }
    int last = static_cast<int>(tr.pos.size()) - 1;
    int k = std::min(t, last);
    s.px = tr.pos[static_cast<size_t>(k)].x;
    s.py = tr.pos[static_cast<size_t>(k)].y;
    s.vx = tr.vel[static_cast<size_t>(k)].x;
    s.vy = tr.vel[static_cast<size_t>(k)].y;
    if (t > last) {
        s.px += s.vx * rs.scenario.dt * (t - last);
        s.py += s.vy * rs.scenario.dt * (t - last);
    }
    return s;
}

/// Scenario as seen at stage t: the supplied ego state and the replayed
/// positions of the others.
inline Scenario scenario_at(const ReplayScenario& rs, int t, const EgoState& ego) {
    Scenario sc = rs.scenario;
    sc.ego = ego;
    for (size_t i = 0; i < sc.others.size(); ++i) sc.others[i] = agent_at(rs, i, t);
    return sc;
}

/// Obstacle filter: drops agents strictly behind the ego along the driving
/// direction. Rear traffic is the follower's responsibility.
inline std::vector<AgentState> apply_filters(const Scenario& sc) {
    std::vector<AgentState> kept;
    kept.reserve(sc.others.size());
    for (const AgentState& o : sc.others) {
        if (!strictly_behind(sc.ego, o, sc.direction)) kept.push_back(o);
    }
    return kept;
}

enum class RolloutMode { SafeL, SafeE, PresafeOnly, Ttos };

inline const char* to_string(RolloutMode m) {
    switch (m) {
        case RolloutMode::SafeL: return "safe-L";
        case RolloutMode::SafeE: return "safe-E";
        case RolloutMode::PresafeOnly: return "presafe-only";
        case RolloutMode::Ttos: return "ttos";
    }
    return "?";
}

/// State-independent pre-safe policy parameters (pre-squash space).
struct PolicyConfig {
    Vec2 mean{0.0, 0.0};
    Vec2 logStd{0.0, 0.0};
};

struct RolloutConfig {
    int gridNx{10};
    int gridNy{10};
    /// Certification constant; when unset, the per-stage pragmatic bound
    /// certification_gamma is used.
    std::optional<double> gamma;
    CandidateSet candidates{};
};

struct StageRecord {
    EgoState state;
    std::optional<Vec2> preSafeAction;
    Vec2 action;
    std::optional<double> logDensity;
    int safeCellCount{-1};  // -1 when the safe set was not evaluated
    bool fallbackUsed{false};
    double momentaryCost{0.0};
};

struct RolloutRecord {
    RolloutMode mode{RolloutMode::SafeL};
    std::uint64_t seed{0};
    std::vector<StageRecord> stages;
    EgoState finalState;
    double finalMomentaryCost{0.0};
    bool completed{true};

    bool collided() const {
        for (const auto& st : stages)
            if (st.momentaryCost > 0.0) return true;
        return finalMomentaryCost > 0.0;
    }
};

namespace detail {

inline double stage_momentary_cost(const Scenario& sc) {
    auto kept = apply_filters(sc);
    std::vector<Box2> boxes;
    boxes.reserve(kept.size());
    for (const auto& o : kept) boxes.push_back(o.box());
    return momentary_cost(sc.ego.box(), boxes, sc.road);
}

}  // namespace detail

/// One open-loop replay rollout: at every stage the safe set is inferred,
/// the distance-based layer built, an action sampled and the fallback memory
/// refreshed; an empty safe set triggers the stored fallback. The others
/// follow their recorded tracks while the safety reasoning stays worst-case.
/// ttos runs the same execution path as safe-L; its policy parameters are
/// simply those of an unconstrained-trained policy.
inline RolloutRecord rollout(const ReplayScenario& rs, const PolicyConfig& policy,
                             RolloutMode mode, std::uint64_t seed,
                             const RolloutConfig& cfg = {}) {
    const Scenario& base = rs.scenario;
    GridPartition grid(base.actionBox, cfg.gridNx, cfg.gridNy);
    GaussianSampler rng(seed);
    PreSafeGaussian preSafe{policy.mean, policy.logStd, base.actionBox};

    RolloutRecord rec;
    rec.mode = mode;
    rec.seed = seed;
    rec.stages.reserve(static_cast<size_t>(base.horizon));

    EgoState ego = base.ego;
    std::optional<FallbackMemory> memory;

    for (int t = 0; t < base.horizon; ++t) {
        Scenario sc = scenario_at(rs, t, ego);
        StageRecord st;
        st.state = ego;
        st.momentaryCost = detail::stage_momentary_cost(sc);

        if (mode == RolloutMode::PresafeOnly) {
            Vec2 n = rng.standardNormalPair();
            Vec2 z{preSafe.mean.x + preSafe.sigmaX() * n.x,
                   preSafe.mean.y + preSafe.sigmaY() * n.y};
            Vec2 aHat = preSafe.squash(z);
            st.preSafeAction = aHat;
            st.action = aHat;
            st.logDensity = std::log(preSafe.density(aHat));
        } else {
            CertMode cert = mode == RolloutMode::SafeE ? CertMode::ExtremalE : CertMode::LipschitzL;
            std::optional<double> gamma;
            if (cert == CertMode::LipschitzL) {
                gamma = cfg.gamma ? *cfg.gamma : certification_gamma(sc, t);
            }
            SafeSet safeSet = infer_safe_set(sc, t, grid, cert, gamma, cfg.candidates);
            st.safeCellCount = static_cast<int>(safeSet.safeCells.size());

            if (safeSet.empty()) {
                if (!memory) {
                    throw InitiallyUnsafeScenario(
                        "rollout: no certified safe action at the initial stage");
                }
                st.fallbackUsed = true;
                st.action = memory->nextAccel();
            } else {
                SafePolicy safePolicy{preSafe, build_distance_map(grid, safeSet)};
                PolicySample s = sample(safePolicy, rng);
                st.preSafeAction = s.preSafeAction;
                st.action = s.action;
                st.logDensity = s.logDensity;
                SafetyVerdict verdict = total_safety_cost(sc, t, s.action, cfg.candidates);
                if (verdict.w <= 0.0) {
                    memory = update_fallback(memory.value_or(FallbackMemory{}), safeSet, verdict);
                }
            }
        }

        rec.stages.push_back(st);
        ego = step_double_integrator(ego, st.action, base.dt);
    }

    rec.finalState = ego;
    rec.finalMomentaryCost = detail::stage_momentary_cost(scenario_at(rs, base.horizon, ego));
    return rec;
}

struct MetricsReport {
    double collisionProbability{0.0};
    double ade{0.0};
    double fde{0.0};
    double horizonSeconds{0.0};
    bool truncated{false};
};

/// Displacement errors of one rollout against the reference trajectory over
/// a fixed window (default 4 s). Errors are evaluated at the predicted
/// stages 1..K; a reference shorter than the window truncates the metric.
inline MetricsReport metrics(const RolloutRecord& rec, const std::vector<Vec2>& reference,
                             double dt, double windowSeconds = 4.0) {
    std::vector<Vec2> positions;
    positions.reserve(rec.stages.size() + 1);
    for (const auto& st : rec.stages) positions.push_back({st.state.px, st.state.py});
    positions.push_back({rec.finalState.px, rec.finalState.py});

    int want = static_cast<int>(std::llround(windowSeconds / dt));
    int avail = static_cast<int>(std::min(positions.size(), reference.size())) - 1;
    if (avail < 1) throw std::invalid_argument("metrics: reference too short");
    int K = std::min(want, avail);

    MetricsReport r;
    r.truncated = K < want;
    r.horizonSeconds = K * dt;
    double sum = 0.0;
    for (int k = 1; k <= K; ++k) {
        Vec2 d = positions[static_cast<size_t>(k)] - reference[static_cast<size_t>(k)];
        double err = std::hypot(d.x, d.y);
        sum += err;
        if (k == K) r.fde = err;
    }
    r.ade = sum / K;
    r.collisionProbability = rec.collided() ? 1.0 : 0.0;
    return r;
}

struct BatchResult {
    std::vector<RolloutRecord> records;
    MetricsReport metrics;
    int initiallyUnsafe{0};
    int incomplete{0};
};

/// Seed-ordered batch of rollouts with aggregate metrics. Initially unsafe
/// scenarios and fallback-horizon exhaustion are tallied, not raised.
inline BatchResult run_rollouts(const ReplayScenario& rs, const PolicyConfig& policy,
                                RolloutMode mode, int seeds, const RolloutConfig& cfg = {},
                                double windowSeconds = 4.0) {
    BatchResult out;
    int collided = 0;
    double adeSum = 0.0, fdeSum = 0.0;
    int measured = 0;
    for (int seed = 0; seed < seeds; ++seed) {
        try {
            RolloutRecord rec = rollout(rs, policy, mode, static_cast<std::uint64_t>(seed), cfg);
            if (rec.collided()) ++collided;
            if (!rs.egoReference.empty()) {
                MetricsReport m = metrics(rec, rs.egoReference, rs.scenario.dt, windowSeconds);
                adeSum += m.ade;
                fdeSum += m.fde;
                out.metrics.horizonSeconds = m.horizonSeconds;
                out.metrics.truncated = m.truncated;
                ++measured;
            }
            out.records.push_back(std::move(rec));
        } catch (const InitiallyUnsafeScenario&) {
            ++out.initiallyUnsafe;
        } catch (const FallbackExhausted&) {
            ++out.incomplete;
        }
    }
    int total = static_cast<int>(out.records.size());
    out.metrics.collisionProbability = total > 0 ? static_cast<double>(collided) / total : 0.0;
    out.metrics.ade = measured > 0 ? adeSum / measured : 0.0;
    out.metrics.fde = measured > 0 ? fdeSum / measured : 0.0;
    return out;
}

}  // namespace failsafe
