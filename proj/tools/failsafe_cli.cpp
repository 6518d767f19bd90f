// Command-line harness: safe-set certification, replay rollouts, the
// compounding-error bound sweep, and density/gradient self-checks.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "failsafe/quadrature.hpp"
#include "failsafe/rollout.hpp"
#include "failsafe/safe_set.hpp"
#include "failsafe/scenario_io.hpp"
#include "failsafe/tabular_mdp.hpp"

using nlohmann::json;
using namespace failsafe;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct GridSpec {
    int nx{10};
    int ny{10};
};

GridSpec parse_grid(const std::string& s) {
    GridSpec g;
    char x = 0;
    if (std::sscanf(s.c_str(), "%d%c%d", &g.nx, &x, &g.ny) != 3 || (x != 'x' && x != 'X') ||
        g.nx < 1 || g.ny < 1) {
        throw CLI::ValidationError("--grid", "expected NxM with positive integers, got '" + s + "'");
    }
    return g;
}

std::string default_config_path() {
    const char* env = std::getenv("FAILSAFE_CONFIG");
    return env ? env : "";
}

ReplayScenario load_any_scenario(const std::string& path, const std::string& configPath) {
    if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") {
        std::string cfgPath = !configPath.empty() ? configPath : default_config_path();
        if (cfgPath.empty()) {
            throw ConfigurationError("CSV scenario needs --config or FAILSAFE_CONFIG");
        }
        auto scenarios = ingest_csv(path, load_csv_config(cfgPath));
        return scenarios.front();
    }
    return load_scenario_json(path);
}

void emit(const std::string& text, const std::string& outPath) {
    if (outPath.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(outPath);
        if (!out) throw std::runtime_error("cannot write " + outPath);
        out << text;
    }
}

json policy_to_json(const PolicyConfig& p) {
    return {{"mean", {p.mean.x, p.mean.y}}, {"logStd", {p.logStd.x, p.logStd.y}}};
}

PolicyConfig load_policy(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open policy file: " + path);
    json j;
    try {
        in >> j;
        PolicyConfig p;
        p.mean = {j.at("mean").at(0).get<double>(), j.at("mean").at(1).get<double>()};
        p.logStd = {j.at("logStd").at(0).get<double>(), j.at("logStd").at(1).get<double>()};
        return p;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

/// Default certification constant when none is given: the generic
/// max(1, beta^T) form with alpha = 2 and beta the one-step ZOH operator
/// norm. Conservative; pass --gamma auto for the tighter per-scenario bound.
double spec_default_gamma(const Scenario& sc, int stage) {
    return lipschitz_gamma({2.0, 1.0 + sc.dt, sc.horizon - stage});
}

int run_certify(const std::string& scenarioPath, const std::string& configPath, int stage,
                const std::string& modeStr, const GridSpec& gridSpec,
                const std::string& gammaStr, const std::string& outPath) {
    ReplayScenario rs = load_any_scenario(scenarioPath, configPath);
    Scenario sc = scenario_at(rs, stage, rs.scenario.ego);
    CertMode mode = modeStr == "E" ? CertMode::ExtremalE : CertMode::LipschitzL;
    GridPartition grid(sc.actionBox, gridSpec.nx, gridSpec.ny);

    std::optional<double> gamma;
    if (mode == CertMode::LipschitzL) {
        if (gammaStr.empty()) {
            gamma = spec_default_gamma(sc, stage);
        } else if (gammaStr == "auto") {
            gamma = certification_gamma(sc, stage);
        } else {
            gamma = std::stod(gammaStr);
        }
    }

    SafeSet set = infer_safe_set(sc, stage, grid, mode, gamma);

    json report;
    report["schemaVersion"] = 1;
    report["command"] = "certify";
    report["scenario"] = scenarioPath;
    report["stage"] = stage;
    report["mode"] = modeStr == "E" ? "E" : "L";
    if (gamma) report["gamma"] = *gamma;
    report["grid"] = {{"nx", grid.nx},
                      {"ny", grid.ny},
                      {"bounds",
                       {{"x", {grid.bounds.x.lo, grid.bounds.x.hi}},
                        {"y", {grid.bounds.y.lo, grid.bounds.y.hi}}}}};
    report["safeCellCount"] = set.safeCells.size();
    report["safeCells"] = set.safeCells;
    json wValues = json::array();
    for (const auto& ws : set.perCellW) wValues.push_back(ws);
    report["perCellW"] = wValues;
    if (mode == CertMode::ExtremalE) report["note"] = "corner certification is heuristic";
    emit(report.dump(2) + "\n", outPath);
    return kExitOk;
}

RolloutMode parse_mode(const std::string& s) {
    if (s == "safe-L") return RolloutMode::SafeL;
    if (s == "safe-E") return RolloutMode::SafeE;
    if (s == "presafe-only") return RolloutMode::PresafeOnly;
    if (s == "ttos") return RolloutMode::Ttos;
    throw CLI::ValidationError("--mode", "unknown mode '" + s + "'");
}

json stage_to_json(const StageRecord& st) {
    json j;
    j["state"] = {st.state.px, st.state.py, st.state.vx, st.state.vy};
    j["action"] = {st.action.x, st.action.y};
    j["preSafeAction"] =
        st.preSafeAction ? json::array({st.preSafeAction->x, st.preSafeAction->y}) : json();
    j["logDensity"] = st.logDensity ? json(*st.logDensity) : json();
    j["safeCellCount"] = st.safeCellCount >= 0 ? json(st.safeCellCount) : json();
    j["fallbackUsed"] = st.fallbackUsed;
    j["momentaryCost"] = st.momentaryCost;
    return j;
}

int run_rollout_cmd(const std::string& scenarioPath, const std::string& configPath,
                    const std::string& modeStr, int seeds, const std::string& policyPath,
                    const GridSpec& gridSpec, double window, bool withRecords,
                    const std::string& outPath) {
    ReplayScenario rs = load_any_scenario(scenarioPath, configPath);
    RolloutMode mode = parse_mode(modeStr);
    PolicyConfig policy = load_policy(policyPath);
    RolloutConfig cfg;
    cfg.gridNx = gridSpec.nx;
    cfg.gridNy = gridSpec.ny;

    BatchResult batch = run_rollouts(rs, policy, mode, seeds, cfg, window);

    json report;
    report["schemaVersion"] = 1;
    report["command"] = "rollout";
    report["scenario"] = scenarioPath;
    report["mode"] = modeStr;
    report["seeds"] = seeds;
    report["policy"] = policy_to_json(policy);
    report["grid"] = {{"nx", cfg.gridNx}, {"ny", cfg.gridNy}};
    report["windowSeconds"] = window;
    report["metrics"] = {{"collisionProbability", batch.metrics.collisionProbability},
                         {"ade", batch.metrics.ade},
                         {"fde", batch.metrics.fde},
                         {"horizonSeconds", batch.metrics.horizonSeconds},
                         {"truncated", batch.metrics.truncated}};
    report["completedRollouts"] = batch.records.size();
    report["initiallyUnsafe"] = batch.initiallyUnsafe;
    report["incomplete"] = batch.incomplete;
    if (withRecords) {
        json records = json::array();
        for (const RolloutRecord& rec : batch.records) {
            json r;
            r["seed"] = rec.seed;
            r["finalState"] = {rec.finalState.px, rec.finalState.py, rec.finalState.vx,
                               rec.finalState.vy};
            r["finalMomentaryCost"] = rec.finalMomentaryCost;
            r["collided"] = rec.collided();
            json stages = json::array();
            for (const StageRecord& st : rec.stages) stages.push_back(stage_to_json(st));
            r["stages"] = stages;
            records.push_back(r);
        }
        report["records"] = records;
    }
    emit(report.dump(2) + "\n", outPath);
    return kExitOk;
}

std::vector<double> parse_deltas(const std::string& list) {
    std::vector<double> deltas;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) deltas.push_back(std::stod(item));
    }
    if (deltas.empty()) throw CLI::ValidationError("--deltas", "no values parsed");
    return deltas;
}

int run_mdp_bounds(int tmax, const std::string& deltaList, const std::string& outPath) {
    std::vector<double> deltas = parse_deltas(deltaList);
    std::vector<int> horizons;
    for (int T : {2, 5, 10, 20, 50, 100, 200, 500, 1000}) {
        if (T <= tmax) horizons.push_back(T);
    }
    if (horizons.empty()) throw CLI::ValidationError("--tmax", "must be >= 2");

    std::string csv;
    csv +=
        "T,delta,epsilon,v_gap_exact,closed_form,closed_form_shifted,lower_bound,upper_bound,"
        "lower_applicable,lower_pass,upper_pass,closed_form_pass,kappa,kappa_pass\n";
    bool allPass = true;
    char line[512];
    for (double delta : deltas) {
        for (int T : horizons) {
            mdp::QuadraticBoundReport r = mdp::check_quadratic_bounds(T, delta);
            double kappa = mdp::kappa_term(T);
            bool kappaPass = kappa >= 0.25 && kappa <= std::exp(-1.0);
            std::snprintf(line, sizeof(line),
                          "%d,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%d,%d,%d,%d,%.12g,%d\n",
                          r.T, r.delta, r.epsilon, r.gapExact, r.closedForm, r.closedFormShifted,
                          r.lowerBound, r.upperBound, r.lowerApplicable ? 1 : 0,
                          r.lowerHolds ? 1 : 0, r.upperHolds ? 1 : 0, r.closedFormMatches ? 1 : 0,
                          kappa, kappaPass ? 1 : 0);
            csv += line;
            allPass = allPass && r.lowerHolds && r.upperHolds && r.closedFormMatches && kappaPass;
        }
    }
    emit(csv, outPath);
    if (!allPass) {
        std::cerr << "mdp-bounds: at least one check failed\n";
        return kExitUsage;
    }
    return kExitOk;
}

int run_density_check(std::uint64_t seed, int trials, const GridSpec& gridSpec,
                      const std::string& outPath) {
    GridPartition grid({Interval{-5.0, 5.0}, Interval{-5.0, 5.0}}, gridSpec.nx, gridSpec.ny);
    std::mt19937_64 engine(seed);
    auto uniform = [&engine](double lo, double hi) {
        return lo + (hi - lo) * ((static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53);
    };

    json results = json::array();
    double maxNormErr = 0.0, maxGradErr = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        SafeSet set;
        set.grid = grid;
        for (int c = 0; c < grid.cellCount(); ++c) {
            if (uniform(0.0, 1.0) < 0.4) set.safeCells.push_back(c);
        }
        if (set.safeCells.empty()) set.safeCells.push_back(0);
        set.perCellW.resize(static_cast<size_t>(grid.cellCount()));

        PreSafeGaussian pre{{uniform(-1.0, 1.0), uniform(-1.0, 1.0)},
                            {uniform(-0.8, 0.2), uniform(-0.8, 0.2)},
                            grid.bounds};
        bool probability = trial % 2 == 1;
        SafePolicy policy{pre, probability ? build_probability_map(grid, set, pre)
                                           : build_distance_map(grid, set)};

        double normErr = std::abs(integrate_density(policy) - 1.0);
        maxNormErr = std::max(maxNormErr, normErr);

        double gradErr = 0.0;
        const double h = 1e-6;
        for (int pt = 0; pt < 20; ++pt) {
            int cell = set.safeCells[engine() % set.safeCells.size()];
            Box2 cb = grid.cell(cell);
            Vec2 a{cb.x.lo + uniform(0.05, 0.95) * cb.x.width(),
                   cb.y.lo + uniform(0.05, 0.95) * cb.y.width()};
            auto g = grad_log_density(policy, a);
            for (int comp = 0; comp < 4; ++comp) {
                auto logAt = [&](double eps) {
                    PreSafeGaussian p = pre;
                    if (comp == 0) p.mean.x += eps;
                    if (comp == 1) p.mean.y += eps;
                    if (comp == 2) p.logStd.x += eps;
                    if (comp == 3) p.logStd.y += eps;
                    return std::log(density(SafePolicy{p, policy.map}, a));
                };
                double fd = (logAt(h) - logAt(-h)) / (2.0 * h);
                gradErr = std::max(gradErr, std::abs(g[static_cast<size_t>(comp)] - fd) /
                                                std::max(1.0, std::abs(fd)));
            }
        }
        maxGradErr = std::max(maxGradErr, gradErr);
        results.push_back({{"trial", trial},
                           {"layer", probability ? "probability" : "distance"},
                           {"safeCells", set.safeCells.size()},
                           {"normalizationError", normErr},
                           {"maxGradientRelativeError", gradErr}});
    }

    bool pass = maxNormErr <= 1e-3 && maxGradErr <= 1e-5;
    json report;
    report["schemaVersion"] = 1;
    report["command"] = "density-check";
    report["seed"] = seed;
    report["trials"] = trials;
    report["grid"] = {{"nx", gridSpec.nx}, {"ny", gridSpec.ny}};
    report["results"] = results;
    report["maxNormalizationError"] = maxNormErr;
    report["maxGradientRelativeError"] = maxGradErr;
    report["pass"] = pass;
    emit(report.dump(2) + "\n", outPath);
    return pass ? kExitOk : kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fail-safe imitation toolkit"};
    app.require_subcommand(1);

    std::string scenarioPath, configPath, outPath, gammaStr, policyPath;
    std::string gridStr = "10x10";
    std::string modeStr;
    int stage = 0, seeds = 1, trials = 20, tmax = 100;
    double window = 4.0;
    std::uint64_t seed = 0;
    bool withRecords = false;
    std::string deltaList;

    CLI::App* certify = app.add_subcommand("certify", "infer the certified safe action set");
    certify->add_option("--scenario", scenarioPath, "scenario JSON or CSV")->required();
    certify->add_option("--config", configPath, "CSV sidecar config (or FAILSAFE_CONFIG)");
    certify->add_option("--stage", stage, "evaluation stage (default 0)");
    certify->add_option("--mode", modeStr, "L (Lipschitz) or E (corner)")
        ->required()
        ->check(CLI::IsMember({"L", "E"}));
    certify->add_option("--grid", gridStr, "grid as NxM (default 10x10)");
    certify->add_option("--gamma", gammaStr, "Lipschitz constant, a number or 'auto'");
    certify->add_option("--out", outPath, "write the JSON report here instead of stdout");

    CLI::App* roll = app.add_subcommand("rollout", "replay rollouts with the fail-safe imitator");
    roll->add_option("--scenario", scenarioPath, "scenario JSON or CSV")->required();
    roll->add_option("--config", configPath, "CSV sidecar config (or FAILSAFE_CONFIG)");
    roll->add_option("--mode", modeStr, "safe-L | safe-E | presafe-only | ttos")->required();
    roll->add_option("--seeds", seeds, "number of seeded rollouts")->required();
    roll->add_option("--policy", policyPath, "pre-safe policy parameters JSON");
    roll->add_option("--grid", gridStr, "grid as NxM (default 10x10)");
    roll->add_option("--window", window, "metric window in seconds (default 4)");
    roll->add_flag("--records", withRecords, "include per-stage records in the report");
    roll->add_option("--out", outPath, "write the JSON report here instead of stdout");

    CLI::App* bounds = app.add_subcommand("mdp-bounds", "compounding-error bound sweep (CSV)");
    bounds->add_option("--tmax", tmax, "largest horizon to sweep")->required();
    bounds->add_option("--deltas", deltaList, "comma-separated deviation probabilities")
        ->required();
    bounds->add_option("--out", outPath, "write the CSV here instead of stdout");

    CLI::App* dens = app.add_subcommand("density-check", "normalization and gradient self-check");
    dens->add_option("--seed", seed, "RNG seed")->required();
    dens->add_option("--trials", trials, "number of random (safe set, theta) pairs")->required();
    dens->add_option("--grid", gridStr, "grid as NxM (default 10x10)");
    dens->add_option("--out", outPath, "write the JSON report here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        GridSpec grid = parse_grid(gridStr);
        if (certify->parsed()) {
            return run_certify(scenarioPath, configPath, stage, modeStr, grid, gammaStr, outPath);
        }
        if (roll->parsed()) {
            return run_rollout_cmd(scenarioPath, configPath, modeStr, seeds, policyPath, grid,
                                   window, withRecords, outPath);
        }
        if (bounds->parsed()) {
            return run_mdp_bounds(tmax, deltaList, outPath);
        }
        if (dens->parsed()) {
            return run_density_check(seed, trials, grid, outPath);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const ConfigurationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
