#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <vector>

#include "failsafe/geometry.hpp"
#include "failsafe/safety_cost.hpp"

namespace failsafe {

struct FallbackExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class CertMode { LipschitzL, ExtremalE };

/// Per-cell certification outcome. Cells are never declared unsafe: a failed
/// certificate only means the cell could not be proven safe.
struct CellCertificate {
    bool safe{false};
    std::vector<double> wValues;  // center value (L) or the 4 corner values (E)
};

/// Lipschitz certificate: the cell is safe when the center cost clears zero
/// by gamma times the cell's l_inf radius, so the whole cell stays sub-zero.
inline CellCertificate certify_cell_lipschitz(const Scenario& sc, int t, const Box2& cell,
                                              double gamma,
                                              const CandidateSet& cands = CandidateSet::all()) {
    if (gamma <= 0.0) throw std::invalid_argument("certify_cell_lipschitz: gamma must be > 0");
    double r = 0.5 * std::max(cell.x.width(), cell.y.width());
    double w = total_safety_cost_value(sc, t, cell.center(), cands);
    return {w <= -gamma * r, {w}};
}

/// Corner certificate: safe when all four cell corners have w <= 0. Exact
/// rather than conservative when the total cost is convex over the cell.
inline CellCertificate certify_cell_corners(const Scenario& sc, int t, const Box2& cell,
                                            const CandidateSet& cands = CandidateSet::all()) {
    CellCertificate cert;
    cert.wValues.reserve(4);
    bool safe = true;
    for (double cy : {cell.y.lo, cell.y.hi}) {
        for (double cx : {cell.x.lo, cell.x.hi}) {
            double w = total_safety_cost_value(sc, t, Vec2{cx, cy}, cands);
            cert.wValues.push_back(w);
            safe = safe && w <= 0.0;
        }
    }
    cert.safe = safe;
    return cert;
}

/// Certified inner approximation of the safe action set over a grid.
struct SafeSet {
    GridPartition grid;
    std::vector<int> safeCells;                // sorted, row-major order
    std::vector<std::vector<double>> perCellW; // indexed by cell
    CertMode mode{CertMode::LipschitzL};
    double gamma{0.0};

    bool isSafe(int cell) const {
        return std::binary_search(safeCells.begin(), safeCells.end(), cell);
    }
    bool empty() const { return safeCells.empty(); }
};

inline SafeSet infer_safe_set(const Scenario& sc, int t, const GridPartition& grid, CertMode mode,
                              std::optional<double> gamma = std::nullopt,
                              const CandidateSet& cands = CandidateSet::all()) {
    if (mode == CertMode::LipschitzL && !gamma) {
        throw std::invalid_argument("infer_safe_set: Lipschitz mode requires gamma");
    }
    SafeSet set;
    set.grid = grid;
    set.mode = mode;
    set.gamma = mode == CertMode::LipschitzL ? *gamma : 0.0;
    set.perCellW.resize(static_cast<size_t>(grid.cellCount()));
    for (int c = 0; c < grid.cellCount(); ++c) {
        CellCertificate cert = mode == CertMode::LipschitzL
                                   ? certify_cell_lipschitz(sc, t, grid.cell(c), *gamma, cands)
                                   : certify_cell_corners(sc, t, grid.cell(c), cands);
        set.perCellW[static_cast<size_t>(c)] = std::move(cert.wValues);
        if (cert.safe) set.safeCells.push_back(c);
    }
    return set;
}

/// The stored fail-safe continuation. When no certified cell exists at some
/// stage, the caller executes the memory's next step instead.
struct FallbackMemory {
    FallbackManeuver maneuver;
    int stageOffset{0};

    bool exhausted() const {
        return stageOffset >= static_cast<int>(maneuver.accelSeq.size());
    }

    Vec2 nextAccel() {
        if (exhausted()) {
            throw FallbackExhausted("fallback memory: maneuver horizon exhausted");
        }
        return maneuver.accelSeq[static_cast<size_t>(stageOffset++)];
    }
};

/// Replaces the memory with the freshly certified action's best fallback.
inline FallbackMemory update_fallback(FallbackMemory /*memory*/, const SafeSet& /*safeSet*/,
                                      const SafetyVerdict& chosen) {
    if (chosen.w > 0.0) {
        throw std::invalid_argument("update_fallback: chosen action was not certified (w > 0)");
    }
    return FallbackMemory{chosen.bestFallback, 0};
}

}  // namespace failsafe
