#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

namespace failsafe::mdp {

/// The five-state lane-keeping MDP used for the compounding-error analysis.
/// States are (position deviation, velocity deviation, lane) triplets:
///   0: (0, 0, l)  demonstrator state
///   1: (0, 1, l)  deviated, too fast
///   2: (1, 0, l)  too close to the front vehicle (unsafe region)
///   3: (1, 0, r)  side strip, absorbing
///   4: (1,-1, l)  enumerated for completeness; unreachable under the
///                 policies defined here
inline constexpr int kNumStates = 5;
inline constexpr int kDemoState = 0;

struct TabularMDP {
    int horizon{1};
    std::array<double, kNumStates> cost{};                 // c*, state-only
    std::vector<std::vector<int>> successor;               // successor[s][a]
    std::vector<std::vector<bool>> actionSafe;             // entering no unsafe state
    std::vector<std::string> stateNames;

    int actionCount(int s) const { return static_cast<int>(successor[static_cast<size_t>(s)].size()); }
};

/// Builds the counterexample: a demonstrator self-loop, a deviation edge to
/// the too-fast state, a forced entry into the unsafe region with recovery
/// for the unconstrained imitator, and a safety-forced absorbing side strip.
inline TabularMDP build_counterexample(int T) {
    if (T < 2) throw std::invalid_argument("build_counterexample: T must be >= 2");
    TabularMDP m;
    m.horizon = T;
    m.cost = {0.0, 1.0, 1.0, 1.0, 1.0};
    m.stateNames = {"(0,0,l)", "(0,1,l)", "(1,0,l)", "(1,0,r)", "(1,-1,l)"};
    m.successor = {
        {0, 1},  // hold / accelerate
        {2, 3},  // brake keeping lane / brake to side strip
        {0},     // recover to demonstrator state
        {3},     // trapped on the side strip
        {0},     // speed back up (never reached)
    };
    m.actionSafe = {
        {true, true},
        {false, true},  // keeping the lane enters the unsafe region
        {true},
        {true},
        {true},
    };
    return m;
}

/// Per-state action distribution.
struct PolicyTable {
    std::vector<std::vector<double>> probs;

    void validate(const TabularMDP& m) const {
        for (int s = 0; s < kNumStates; ++s) {
            const auto& row = probs[static_cast<size_t>(s)];
            if (static_cast<int>(row.size()) != m.actionCount(s))
                throw std::invalid_argument("PolicyTable: row size mismatch");
            double sum = 0.0;
            for (double p : row) {
                if (p < 0.0) throw std::invalid_argument("PolicyTable: negative probability");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-12)
                throw std::invalid_argument("PolicyTable: row does not sum to 1");
        }
    }

    /// True when no mass is placed on actions entering the unsafe region.
    bool respectsSafety(const TabularMDP& m) const {
        for (int s = 0; s < kNumStates; ++s) {
            for (int a = 0; a < m.actionCount(s); ++a) {
                if (!m.actionSafe[static_cast<size_t>(s)][static_cast<size_t>(a)] &&
                    probs[static_cast<size_t>(s)][static_cast<size_t>(a)] > 0.0)
                    return false;
            }
        }
        return true;
    }
};

struct AgentPolicies {
    PolicyTable demonstrator;
    PolicyTable unconstrained;   // deviates with probability delta, recovers
    PolicyTable testTimeOnly;    // same deviation, then forced to the side strip
};

/// The three agents of the construction, parameterized by the imitation
/// error delta at the demonstrator state.
inline AgentPolicies make_policies(double delta) {
    if (delta < 0.0 || delta > 1.0) throw std::invalid_argument("make_policies: delta in [0,1]");
    AgentPolicies p;
    p.demonstrator.probs = {{1.0, 0.0}, {0.0, 1.0}, {1.0}, {1.0}, {1.0}};
    p.unconstrained.probs = {{1.0 - delta, delta}, {1.0, 0.0}, {1.0}, {1.0}, {1.0}};
    p.testTimeOnly.probs = {{1.0 - delta, delta}, {0.0, 1.0}, {1.0}, {1.0}, {1.0}};
    return p;
}

using StateDist = std::array<double, kNumStates>;

inline StateDist demo_init() { return {1.0, 0.0, 0.0, 0.0, 0.0}; }

/// Stationary initialization of the unconstrained imitator's chain,
/// (1, delta, delta, delta, 0) / (1 + 3 delta) over the four depicted states.
inline StateDist stationary_unconstrained_init(double delta) {
    double z = 1.0 + 3.0 * delta;
    return {1.0 / z, delta / z, delta / z, delta / z, 0.0};
}

/// Exact per-stage state distributions for stages 1..T (index t-1); the
/// first entry is the initial distribution.
inline std::vector<StateDist> propagate(const TabularMDP& m, const PolicyTable& policy,
                                        const StateDist& init) {
    policy.validate(m);
    std::vector<StateDist> stages;
    stages.reserve(static_cast<size_t>(m.horizon));
    stages.push_back(init);
    for (int t = 1; t < m.horizon; ++t) {
        StateDist next{};
        const StateDist& cur = stages.back();
        for (int s = 0; s < kNumStates; ++s) {
            if (cur[static_cast<size_t>(s)] == 0.0) continue;
            for (int a = 0; a < m.actionCount(s); ++a) {
                double pa = policy.probs[static_cast<size_t>(s)][static_cast<size_t>(a)];
                if (pa == 0.0) continue;
                int sn = m.successor[static_cast<size_t>(s)][static_cast<size_t>(a)];
                next[static_cast<size_t>(sn)] += cur[static_cast<size_t>(s)] * pa;
            }
        }
        stages.push_back(next);
    }
    return stages;
}

/// Time-averaged state-action distribution over stages 1..T.
struct OccupancyMeasure {
    std::vector<std::vector<double>> rho;  // rho[s][a]

    double totalMass() const {
        double sum = 0.0;
        for (const auto& row : rho)
            for (double v : row) sum += v;
        return sum;
    }
};

inline OccupancyMeasure occupancy(const TabularMDP& m, const PolicyTable& policy,
                                  const StateDist& init) {
    auto stages = propagate(m, policy, init);
    StateDist avg{};
    for (const StateDist& d : stages)
        for (int s = 0; s < kNumStates; ++s) avg[static_cast<size_t>(s)] += d[static_cast<size_t>(s)];
    for (double& v : avg) v /= static_cast<double>(m.horizon);

    OccupancyMeasure occ;
    occ.rho.resize(kNumStates);
    for (int s = 0; s < kNumStates; ++s) {
        occ.rho[static_cast<size_t>(s)].resize(static_cast<size_t>(m.actionCount(s)));
        for (int a = 0; a < m.actionCount(s); ++a) {
            occ.rho[static_cast<size_t>(s)][static_cast<size_t>(a)] =
                avg[static_cast<size_t>(s)] *
                policy.probs[static_cast<size_t>(s)][static_cast<size_t>(a)];
        }
    }
    return occ;
}

/// Total variation distance between two occupancy measures over the same
/// state-action enumeration: half the l1 distance.
inline double tv_distance(const OccupancyMeasure& a, const OccupancyMeasure& b) {
    if (a.rho.size() != b.rho.size()) throw std::invalid_argument("tv_distance: support mismatch");
    double sum = 0.0;
    for (size_t s = 0; s < a.rho.size(); ++s) {
        if (a.rho[s].size() != b.rho[s].size())
            throw std::invalid_argument("tv_distance: support mismatch");
        for (size_t i = 0; i < a.rho[s].size(); ++i) sum += std::abs(a.rho[s][i] - b.rho[s][i]);
    }
    return 0.5 * sum;
}

/// Total cost v = sum_{t=1..T} c . P_{S_t}.
inline double value(const TabularMDP& m, const PolicyTable& policy, const StateDist& init) {
    double v = 0.0;
    for (const StateDist& d : propagate(m, policy, init)) {
        for (int s = 0; s < kNumStates; ++s)
            v += m.cost[static_cast<size_t>(s)] * d[static_cast<size_t>(s)];
    }
    return v;
}

/// (1 - 1/T)^T, bounded in [1/4, e^-1] for every T >= 2.
inline double kappa_term(int T) {
    return std::pow(1.0 - 1.0 / static_cast<double>(T), static_cast<double>(T));
}

/// Exact value gap of the test-time-only imitator started at the
/// demonstrator state: sum_{t=1..T} (1 - (1-delta)^(t-1)).
inline double exact_gap_closed_form(int T, double delta) {
    if (delta == 0.0) return 0.0;
    return static_cast<double>(T) - (1.0 - std::pow(1.0 - delta, T)) / delta;
}

/// Same sum under the by-one-shifted stage convention,
/// sum_{t=1..T} (1 - (1-delta)^t).
inline double shifted_gap_closed_form(int T, double delta) {
    if (delta == 0.0) return 0.0;
    return static_cast<double>(T) - (1.0 - delta) * (1.0 - std::pow(1.0 - delta, T)) / delta;
}

/// Linear-in-T bound check for an arbitrary policy: measures
/// epsilon = TV(rho_pi, rho_D) and tests |v - v_D| <= 2 epsilon T ||c||_inf.
struct LinearBoundReport {
    double epsilon{0.0};
    double gap{0.0};
    double bound{0.0};
    bool holds{false};
};

inline LinearBoundReport linear_bound_report(const TabularMDP& m, const PolicyTable& policy,
                                             const StateDist& init) {
    auto policies = make_policies(0.0);
    double vD = value(m, policies.demonstrator, demo_init());
    double costInf = 0.0;
    for (double c : m.cost) costInf = std::max(costInf, std::abs(c));

    LinearBoundReport r;
    r.gap = std::abs(value(m, policy, init) - vD);
    r.epsilon = tv_distance(occupancy(m, policy, init),
                            occupancy(m, policies.demonstrator, demo_init()));
    r.bound = 2.0 * r.epsilon * m.horizon * costInf;
    r.holds = r.gap <= r.bound + 1e-12;
    return r;
}

/// Quadratic-regime check at (T, delta): exact propagated gap of the
/// test-time-only imitator vs the geometric closed form, the lower bound
/// (1/8) delta T^2 (applicable when delta T <= 1) and the upper bound
/// 4 epsilon T^2 with epsilon = 4 delta.
struct QuadraticBoundReport {
    int T{0};
    double delta{0.0};
    double epsilon{0.0};
    double gapExact{0.0};
    double closedForm{0.0};
    double closedFormShifted{0.0};
    double lowerBound{0.0};
    double upperBound{0.0};
    bool lowerApplicable{false};
    bool lowerHolds{true};
    bool upperHolds{false};
    bool closedFormMatches{false};
};

inline QuadraticBoundReport check_quadratic_bounds(int T, double delta) {
    TabularMDP m = build_counterexample(T);
    auto policies = make_policies(delta);
    double vD = value(m, policies.demonstrator, demo_init());
    double vO = value(m, policies.testTimeOnly, demo_init());

    QuadraticBoundReport r;
    r.T = T;
    r.delta = delta;
    r.epsilon = 4.0 * delta;
    r.gapExact = std::abs(vO - vD);
    r.closedForm = exact_gap_closed_form(T, delta);
    r.closedFormShifted = shifted_gap_closed_form(T, delta);
    r.lowerBound = delta * static_cast<double>(T) * static_cast<double>(T) / 8.0;
    r.upperBound = 4.0 * r.epsilon * static_cast<double>(T) * static_cast<double>(T);
    r.lowerApplicable = delta * static_cast<double>(T) <= 1.0;
    r.lowerHolds = !r.lowerApplicable || r.gapExact >= r.lowerBound - 1e-12;
    r.upperHolds = r.gapExact <= r.upperBound + 1e-12;
    r.closedFormMatches = std::abs(r.gapExact - r.closedForm) <= 1e-12;
    return r;
}

}  // namespace failsafe::mdp
