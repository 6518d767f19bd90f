#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "failsafe/geometry.hpp"
#include "failsafe/policy.hpp"
#include "failsafe/safe_set.hpp"

namespace failsafe {

struct EmptySafeSet : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BoundaryPoint : std::domain_error {
    using std::domain_error::domain_error;
};

/// a' = scale * a + offset, mapping a source cell onto a safe target cell.
struct AffineTransform {
    int targetCell{0};
    Vec2 scale{1.0, 1.0};
    Vec2 offset{0.0, 0.0};

    Vec2 forward(const Vec2& a) const { return {scale.x * a.x + offset.x, scale.y * a.y + offset.y}; }
    Vec2 inverse(const Vec2& a) const { return {(a.x - offset.x) / scale.x, (a.y - offset.y) / scale.y}; }
    double absDetJacobianInverse() const { return 1.0 / (scale.x * scale.y); }
};

/// Piecewise diffeomorphism over a grid partition of the action box: the
/// identity on safe cells, an affine bijection onto some safe cell elsewhere.
/// sourcesByTarget lists, per cell, the unsafe cells mapped onto it, which
/// makes the change-of-variables branch lookup O(branches).
struct PiecewiseMap {
    GridPartition grid;
    std::vector<std::optional<AffineTransform>> perCell;  // nullopt = identity (safe cell)
    std::vector<std::vector<int>> sourcesByTarget;

    bool cellIsIdentity(int cell) const { return !perCell[static_cast<size_t>(cell)].has_value(); }

    void rebuildReverseIndex() {
        sourcesByTarget.assign(static_cast<size_t>(grid.cellCount()), {});
        for (int k = 0; k < grid.cellCount(); ++k) {
            const auto& tr = perCell[static_cast<size_t>(k)];
            if (tr) sourcesByTarget[static_cast<size_t>(tr->targetCell)].push_back(k);
        }
    }
};

namespace detail {

inline AffineTransform cell_onto_cell(const GridPartition& grid, int source, int target) {
    Box2 s = grid.cell(source), t = grid.cell(target);
    AffineTransform tr;
    tr.targetCell = target;
    tr.scale = {t.x.width() / s.x.width(), t.y.width() / s.y.width()};
    tr.offset = {t.x.lo - tr.scale.x * s.x.lo, t.y.lo - tr.scale.y * s.y.lo};
    return tr;
}

}  // namespace detail

/// Distance-based layer: every unsafe cell is translated/scaled onto the
/// safe cell with the nearest center in Euclidean distance (ties to the
/// lowest cell index).
inline PiecewiseMap build_distance_map(const GridPartition& grid, const SafeSet& safeSet) {
    if (safeSet.empty()) throw EmptySafeSet("build_distance_map: no certified safe cell");
    PiecewiseMap map;
    map.grid = grid;
    map.perCell.resize(static_cast<size_t>(grid.cellCount()));
    for (int k = 0; k < grid.cellCount(); ++k) {
        if (safeSet.isSafe(k)) continue;
        Vec2 c = grid.cellCenter(k);
        int bestCell = -1;
        double bestDist = 0.0;
        for (int s : safeSet.safeCells) {
            Vec2 d = grid.cellCenter(s) - c;
            double dist = d.x * d.x + d.y * d.y;
            if (bestCell < 0 || dist < bestDist) {
                bestCell = s;
                bestDist = dist;
            }
        }
        map.perCell[static_cast<size_t>(k)] = detail::cell_onto_cell(grid, k, bestCell);
    }
    map.rebuildReverseIndex();
    return map;
}

/// Probability-based layer: every unsafe cell is mapped onto the safe cell
/// holding the most pre-safe mass, approximated by center density times cell
/// area (ties to the lowest cell index).
inline PiecewiseMap build_probability_map(const GridPartition& grid, const SafeSet& safeSet,
                                          const PreSafeGaussian& preSafe) {
    if (safeSet.empty()) throw EmptySafeSet("build_probability_map: no certified safe cell");
    int bestCell = -1;
    double bestMass = 0.0;
    for (int s : safeSet.safeCells) {
        Box2 cell = grid.cell(s);
        double mass = preSafe.density(cell.center()) * cell.area();
        if (bestCell < 0 || mass > bestMass) {
            bestCell = s;
            bestMass = mass;
        }
    }
    PiecewiseMap map;
    map.grid = grid;
    map.perCell.resize(static_cast<size_t>(grid.cellCount()));
    for (int k = 0; k < grid.cellCount(); ++k) {
        if (safeSet.isSafe(k)) continue;
        map.perCell[static_cast<size_t>(k)] = detail::cell_onto_cell(grid, k, bestCell);
    }
    map.rebuildReverseIndex();
    return map;
}

/// Applies the piecewise map; the result lies in a safe cell.
inline Vec2 apply(const PiecewiseMap& map, const Vec2& aHat) {
    int cell = map.grid.cellOf(aHat);
    const auto& tr = map.perCell[static_cast<size_t>(cell)];
    return tr ? tr->forward(aHat) : aHat;
}

/// Squashed-Gaussian pre-safe policy composed with a piecewise-diffeomorphism
/// safety layer. Density, sampling and parameter gradients are closed form.
struct SafePolicy {
    PreSafeGaussian preSafe;
    PiecewiseMap map;
};

namespace detail {

struct Branch {
    double weight{0.0};  // |det J_{g_k^{-1}}| * preSafeDensity(g_k^{-1}(aTilde))
    Vec2 z;              // pre-squash coordinates of the branch pre-image
};

/// Collects every change-of-variables branch covering aTilde: the identity
/// branch when its cell is safe, plus each unsafe cell whose image contains
/// the point.
inline std::vector<Branch> branches_at(const SafePolicy& policy, const Vec2& aTilde) {
    const PiecewiseMap& map = policy.map;
    int cell = map.grid.cellOf(aTilde);
    std::vector<Branch> out;
    if (map.cellIsIdentity(cell)) {
        double w = policy.preSafe.density(aTilde);
        if (w > 0.0) out.push_back({w, policy.preSafe.unsquash(aTilde)});
    }
    for (int k : map.sourcesByTarget[static_cast<size_t>(cell)]) {
        const AffineTransform& tr = *map.perCell[static_cast<size_t>(k)];
        Vec2 pre = tr.inverse(aTilde);
        if (!map.grid.cellContains(k, pre)) continue;  // point outside this branch's image
        double w = tr.absDetJacobianInverse() * policy.preSafe.density(pre);
        if (w > 0.0) out.push_back({w, policy.preSafe.unsquash(pre)});
    }
    return out;
}

inline bool on_interior_grid_line(const GridPartition& g, const Vec2& a) {
    double cw = g.cellWidth(), ch = g.cellHeight();
    for (int i = 1; i < g.nx; ++i) {
        if (a.x == g.bounds.x.lo + i * cw) return true;
    }
    for (int j = 1; j < g.ny; ++j) {
        if (a.y == g.bounds.y.lo + j * ch) return true;
    }
    return false;
}

}  // namespace detail

/// Closed-form density of the safe policy: the sum, over all branches whose
/// image contains aTilde, of the branch's inverse-Jacobian determinant times
/// the pre-safe density of its pre-image. Zero where no branch reaches.
inline double density(const SafePolicy& policy, const Vec2& aTilde) {
    double sum = 0.0;
    for (const auto& b : detail::branches_at(policy, aTilde)) sum += b.weight;
    return sum;
}

struct PolicySample {
    Vec2 action;
    double logDensity{0.0};
    Vec2 preSafeAction;
};

/// Draws z ~ N(mean, diag(sigma^2)), squashes it into the action box and
/// constrains it through the map. The returned log density is the full
/// multi-branch density at the safe action.
inline PolicySample sample(const SafePolicy& policy, GaussianSampler& rng) {
    Vec2 n = rng.standardNormalPair();
    Vec2 z{policy.preSafe.mean.x + policy.preSafe.sigmaX() * n.x,
           policy.preSafe.mean.y + policy.preSafe.sigmaY() * n.y};
    Vec2 aHat = policy.preSafe.squash(z);
    Vec2 aTilde = apply(policy.map, aHat);
    return {aTilde, std::log(density(policy, aTilde)), aHat};
}

inline PolicySample sample(const SafePolicy& policy, std::uint64_t seed) {
    GaussianSampler rng(seed);
    return sample(policy, rng);
}

/// Analytic gradient of log density w.r.t. theta = (mu_x, mu_y, log sigma_x,
/// log sigma_y): the branch-weighted average of per-branch Gaussian scores
/// (squash Jacobians are constant in theta). Points on interior cell
/// boundaries are rejected; the map is discontinuous there.
inline std::array<double, 4> grad_log_density(const SafePolicy& policy, const Vec2& aTilde) {
    if (detail::on_interior_grid_line(policy.map.grid, aTilde)) {
        throw BoundaryPoint("grad_log_density: point lies on a cell boundary");
    }
    auto branches = detail::branches_at(policy, aTilde);
    double total = 0.0;
    for (const auto& b : branches) total += b.weight;
    if (total <= 0.0) {
        throw std::domain_error("grad_log_density: zero density at query point");
    }
    const double sx = policy.preSafe.sigmaX(), sy = policy.preSafe.sigmaY();
    std::array<double, 4> g{0.0, 0.0, 0.0, 0.0};
    for (const auto& b : branches) {
        double ux = (b.z.x - policy.preSafe.mean.x) / sx;
        double uy = (b.z.y - policy.preSafe.mean.y) / sy;
        g[0] += b.weight * (ux / sx);
        g[1] += b.weight * (uy / sy);
        g[2] += b.weight * (ux * ux - 1.0);
        g[3] += b.weight * (uy * uy - 1.0);
    }
    for (double& v : g) v /= total;
    return g;
}

}  // namespace failsafe
