// Acceptance suite: one test case per release criterion, each printing a
// single pass/fail line. Tolerances are pinned in code.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <vector>

#include "failsafe/quadrature.hpp"
#include "failsafe/rollout.hpp"
#include "failsafe/safe_set.hpp"
#include "failsafe/safety_layer.hpp"
#include "failsafe/scenario_io.hpp"
#include "failsafe/tabular_mdp.hpp"
#include "helpers.hpp"

using namespace failsafe;

#ifndef FAILSAFE_DATA_DIR
#define FAILSAFE_DATA_DIR "data"
#endif

namespace {

const std::string kData = FAILSAFE_DATA_DIR;

struct Criterion {
    const char* name;
    bool pass{false};
    ~Criterion() { std::printf("[%s] %s\n", pass ? "PASS" : "FAIL", name); }
};

SafeSet manual_safe_set(const GridPartition& grid, std::vector<int> safe) {
    SafeSet s;
    s.grid = grid;
    std::sort(safe.begin(), safe.end());
    s.safeCells = std::move(safe);
    s.perCellW.resize(static_cast<size_t>(grid.cellCount()));
    return s;
}

struct RandomPolicySetup {
    SafePolicy policy;
    GridPartition grid;
};

RandomPolicySetup random_policy_setup(testutil::Rng& rng, int nx = 10, int ny = 10) {
    GridPartition grid({Interval{-5.0, 5.0}, Interval{-5.0, 5.0}}, nx, ny);
    std::vector<int> safe;
    for (int c = 0; c < grid.cellCount(); ++c) {
        if (rng.coin(0.4)) safe.push_back(c);
    }
    if (safe.empty()) safe.push_back(rng.uniformInt(0, grid.cellCount() - 1));
    SafeSet set = manual_safe_set(grid, safe);
    PreSafeGaussian pre{{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)},
                        {rng.uniform(-0.8, 0.2), rng.uniform(-0.8, 0.2)},
                        grid.bounds};
    PiecewiseMap map =
        rng.coin() ? build_distance_map(grid, set) : build_probability_map(grid, set, pre);
    return {SafePolicy{pre, std::move(map)}, grid};
}

}  // namespace

TEST_CASE("criterion 1: Lipschitz-mode safe-set soundness on randomized scenarios") {
    Criterion c{"criterion 1: safe-set soundness (L mode), 100 scenarios, dense w <= 0"};
    testutil::Rng rng(10001);
    int violations = 0;
    int certifiedTotal = 0;
    for (int trial = 0; trial < 100; ++trial) {
        Scenario sc = testutil::random_certification_scenario(rng);
        GridPartition grid(sc.actionBox, 10, 10);
        double gamma = certification_gamma(sc, 0);
        SafeSet set = infer_safe_set(sc, 0, grid, CertMode::LipschitzL, gamma);
        certifiedTotal += static_cast<int>(set.safeCells.size());
        for (int cell : set.safeCells) {
            double wMax = testutil::dense_max_w(sc, 0, grid.cell(cell), 11, CandidateSet::all());
            if (wMax > 0.0) ++violations;
        }
    }
    REQUIRE(certifiedTotal > 0);  // non-vacuous
    REQUIRE(violations == 0);
    c.pass = true;
}

TEST_CASE("criterion 2: zero collisions in safe-L, collisions without the layer") {
    Criterion c{"criterion 2: 500 safe-L rollouts collision-free; presafe-only collides"};
    testutil::Rng rng(10002);
    int total = 0;
    int collided = 0;
    PolicyConfig wide;
    wide.logStd = {0.3, 0.3};
    while (total < 500) {
        ReplayScenario rs = testutil::random_adversarial_replay(rng);
        BatchResult batch = run_rollouts(rs, wide, RolloutMode::SafeL, 50);
        for (const RolloutRecord& rec : batch.records) {
            ++total;
            if (rec.collided()) ++collided;
        }
    }
    REQUIRE(total >= 500);
    REQUIRE(collided == 0);

    ReplayScenario wall = load_scenario_json(kData + "/scenarios/adversarial_wall.json");
    BatchResult raw = run_rollouts(wall, wide, RolloutMode::PresafeOnly, 500);
    REQUIRE(raw.metrics.collisionProbability > 0.0);
    BatchResult safe = run_rollouts(wall, wide, RolloutMode::SafeL, 500);
    REQUIRE(safe.records.size() == 500);
    REQUIRE(safe.metrics.collisionProbability == 0.0);
    c.pass = true;
}

TEST_CASE("criterion 3: density normalization by quadrature") {
    Criterion c{"criterion 3: density quadrature = 1 +/- 1e-3 on 20 random (set, theta)"};
    testutil::Rng rng(10003);
    for (int trial = 0; trial < 20; ++trial) {
        auto setup = random_policy_setup(rng);
        REQUIRE(std::abs(integrate_density(setup.policy) - 1.0) <= 1e-3);
    }
    c.pass = true;
}

TEST_CASE("criterion 4: sampling frequencies match integrated density") {
    Criterion c{"criterion 4: 1e5 samples per config within 4-sigma multinomial bounds"};
    testutil::Rng rng(10004);
    const int N = 100000;
    for (int config = 0; config < 6; ++config) {
        auto setup = random_policy_setup(rng);
        auto masses = per_cell_mass_exact(setup.policy);
        std::vector<int> counts(static_cast<size_t>(setup.grid.cellCount()), 0);
        GaussianSampler sampler(7000 + static_cast<std::uint64_t>(config));
        for (int i = 0; i < N; ++i) {
            PolicySample s = sample(setup.policy, sampler);
            counts[static_cast<size_t>(setup.grid.cellOf(s.action))]++;
        }
        for (int cell = 0; cell < setup.grid.cellCount(); ++cell) {
            double p = masses[static_cast<size_t>(cell)];
            double freq = static_cast<double>(counts[static_cast<size_t>(cell)]) / N;
            double sigma = std::sqrt(p * (1.0 - p) / N);
            REQUIRE(std::abs(freq - p) <= 4.0 * sigma + 1e-12);
        }
    }
    c.pass = true;
}

TEST_CASE("criterion 5: analytic gradients vs central finite differences") {
    Criterion c{"criterion 5: grad log-density rel. err <= 1e-5 at 100 interior points"};
    testutil::Rng rng(10005);
    const double h = 1e-6;
    int points = 0;
    while (points < 100) {
        auto setup = random_policy_setup(rng);
        const SafePolicy& policy = setup.policy;
        std::vector<int> identityCells;
        for (int c2 = 0; c2 < setup.grid.cellCount(); ++c2) {
            if (policy.map.cellIsIdentity(c2)) identityCells.push_back(c2);
        }
        for (int k = 0; k < 10 && points < 100; ++k) {
            int cell = identityCells[static_cast<size_t>(
                rng.uniformInt(0, static_cast<int>(identityCells.size()) - 1))];
            Box2 cb = setup.grid.cell(cell);
            Vec2 a{cb.x.lo + rng.uniform(0.05, 0.95) * cb.x.width(),
                   cb.y.lo + rng.uniform(0.05, 0.95) * cb.y.width()};
            if (density(policy, a) < 1e-12) continue;
            auto g = grad_log_density(policy, a);
            for (int comp = 0; comp < 4; ++comp) {
                auto logAt = [&](double eps) {
                    PreSafeGaussian p = policy.preSafe;
                    if (comp == 0) p.mean.x += eps;
                    if (comp == 1) p.mean.y += eps;
                    if (comp == 2) p.logStd.x += eps;
                    if (comp == 3) p.logStd.y += eps;
                    return std::log(density(SafePolicy{p, policy.map}, a));
                };
                double fd = (logAt(h) - logAt(-h)) / (2.0 * h);
                REQUIRE(std::abs(g[static_cast<size_t>(comp)] - fd) <=
                        1e-5 * std::max(1.0, std::abs(fd)));
            }
            ++points;
        }
    }
    c.pass = true;
}

TEST_CASE("criterion 6: linear imitation-error bound for 1000 safe policies") {
    Criterion c{"criterion 6: |v - v_D| <= 2 eps T ||c||_inf, 1000 random safe policies"};
    testutil::Rng rng(10006);
    for (int trial = 0; trial < 1000; ++trial) {
        int T = rng.uniformInt(2, 100);
        mdp::TabularMDP m = mdp::build_counterexample(T);
        mdp::PolicyTable p;
        p.probs.resize(mdp::kNumStates);
        for (int s = 0; s < mdp::kNumStates; ++s) {
            auto& row = p.probs[static_cast<size_t>(s)];
            row.resize(static_cast<size_t>(m.actionCount(s)), 0.0);
            double sum = 0.0;
            for (int a = 0; a < m.actionCount(s); ++a) {
                if (!m.actionSafe[static_cast<size_t>(s)][static_cast<size_t>(a)]) continue;
                row[static_cast<size_t>(a)] = rng.uniform(0.001, 1.0);
                sum += row[static_cast<size_t>(a)];
            }
            for (double& v : row) v /= sum;
        }
        REQUIRE(p.respectsSafety(m));
        mdp::LinearBoundReport r = mdp::linear_bound_report(m, p, mdp::demo_init());
        REQUIRE(r.holds);
    }
    c.pass = true;
}

TEST_CASE("criterion 7: quadratic regime of test-time-only safety") {
    Criterion c{"criterion 7: exact gap = closed form, lower/upper bounds, doubling >= 3.5"};
    for (double delta : {0.01, 0.02, 0.05, 0.1}) {
        for (int T : {2, 5, 10, 20, 50, 100}) {
            mdp::QuadraticBoundReport r = mdp::check_quadratic_bounds(T, delta);
            REQUIRE(r.closedFormMatches);
            REQUIRE(r.upperHolds);
            if (delta * T <= 1.0) {
                REQUIRE(r.lowerApplicable);
                REQUIRE(r.lowerHolds);
            }
            if (delta * T <= 0.2) {
                double ratio = mdp::exact_gap_closed_form(2 * T, delta) /
                               mdp::exact_gap_closed_form(T, delta);
                REQUIRE(ratio >= 3.5);
            }
        }
    }
    c.pass = true;
}

TEST_CASE("criterion 8: kappa bound over all horizons up to 1000") {
    Criterion c{"criterion 8: (1 - 1/T)^T in [0.25, 1/e] for T = 2..1000"};
    for (int T = 2; T <= 1000; ++T) {
        double k = mdp::kappa_term(T);
        REQUIRE(k >= 0.25);
        REQUIRE(k <= std::exp(-1.0));
    }
    c.pass = true;
}

TEST_CASE("criterion 9: corner dominance on convex scenarios") {
    Criterion c{"criterion 9: interior max <= corner max + 1e-9 over 100 random boxes"};
    testutil::Rng rng(10009);
    auto cands = CandidateSet::brakeOnly();
    int boxes = 0;
    while (boxes < 100) {
        Scenario sc = testutil::random_convex_scenario(rng);
        for (int b = 0; b < 10 && boxes < 100; ++b, ++boxes) {
            double cx = rng.uniform(-3.0, 3.0), cy = rng.uniform(-1.5, 1.5);
            double hx = rng.uniform(0.2, 1.0), hy = rng.uniform(0.2, 0.5);
            Box2 box{{cx - hx, cx + hx}, {cy - hy, cy + hy}};
            double interior = testutil::dense_max_w(sc, 0, box, 21, cands);
            double corners = -1e300;
            for (double x : {box.x.lo, box.x.hi}) {
                for (double y : {box.y.lo, box.y.hi}) {
                    corners = std::max(corners, total_safety_cost_value(sc, 0, {x, y}, cands));
                }
            }
            REQUIRE(interior <= corners + 1e-9);
        }
    }
    c.pass = true;
}

TEST_CASE("criterion 10: momentary cost is 2-Lipschitz") {
    Criterion c{"criterion 10: |d(p+delta) - d(p)| <= 2 ||delta||_inf over 10^4 perturbations"};
    testutil::Rng rng(10010);
    for (int trial = 0; trial < 10000; ++trial) {
        RoadBounds road{rng.uniform(-8.0, -2.0), rng.uniform(2.0, 8.0), 3.5};
        std::vector<Box2> obstacles;
        int n = rng.uniformInt(0, 4);
        for (int i = 0; i < n; ++i) {
            double cx = rng.uniform(-20.0, 20.0), cy = rng.uniform(-6.0, 6.0);
            obstacles.push_back({{cx - 2.0, cx + 2.0}, {cy - 1.0, cy + 1.0}});
        }
        double px = rng.uniform(-15.0, 15.0), py = rng.uniform(-4.0, 4.0);
        double dx = rng.uniform(-1.0, 1.0), dy = rng.uniform(-1.0, 1.0);
        auto egoBox = [](double x, double y) {
            return Box2{{x - 2.25, x + 2.25}, {y - 0.9, y + 0.9}};
        };
        double d0 = momentary_cost(egoBox(px, py), obstacles, road);
        double d1 = momentary_cost(egoBox(px + dx, py + dy), obstacles, road);
        REQUIRE(std::abs(d1 - d0) <= 2.0 * std::max(std::abs(dx), std::abs(dy)) + 1e-9);
    }
    c.pass = true;
}
