#pragma once

#include <array>
#include <vector>

#include "failsafe/safety_layer.hpp"

namespace failsafe {

/// 16-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendre16 {
    static constexpr std::array<std::array<double, 2>, 16> nodes{{
        {-9.89400934991649939e-01, 2.71524594117540374e-02},
        {-9.44575023073232600e-01, 6.22535239386477063e-02},
        {-8.65631202387831755e-01, 9.51585116824925914e-02},
        {-7.55404408355002999e-01, 1.24628971255534030e-01},
        {-6.17876244402643771e-01, 1.49595988816576764e-01},
        {-4.58016777657227370e-01, 1.69156519395002619e-01},
        {-2.81603550779258915e-01, 1.82603415044923612e-01},
        {-9.50125098376374544e-02, 1.89450610455068585e-01},
        {9.50125098376374544e-02, 1.89450610455068585e-01},
        {2.81603550779258915e-01, 1.82603415044923612e-01},
        {4.58016777657227370e-01, 1.69156519395002619e-01},
        {6.17876244402643771e-01, 1.49595988816576764e-01},
        {7.55404408355002999e-01, 1.24628971255534030e-01},
        {8.65631202387831755e-01, 9.51585116824925914e-02},
        {9.44575023073232600e-01, 6.22535239386477063e-02},
        {9.89400934991649939e-01, 2.71524594117540374e-02},
    }};
};

/// Composite 2-D quadrature of a function over a box, panels x panels tiles
/// each integrated with the 16-point product rule.
template <typename F>
double integrate_box(const Box2& box, F&& f, int panels = 2) {
    const auto& gl = GaussLegendre16::nodes;
    double pw = box.x.width() / panels, ph = box.y.width() / panels;
    double sum = 0.0;
    for (int px = 0; px < panels; ++px) {
        for (int py = 0; py < panels; ++py) {
            double x0 = box.x.lo + px * pw, y0 = box.y.lo + py * ph;
            double cx = x0 + 0.5 * pw, cy = y0 + 0.5 * ph;
            double panelSum = 0.0;
            for (const auto& nx : gl) {
                for (const auto& ny : gl) {
                    double x = cx + 0.5 * pw * nx[0];
                    double y = cy + 0.5 * ph * ny[0];
                    panelSum += nx[1] * ny[1] * f(Vec2{x, y});
                }
            }
            sum += panelSum * 0.25 * pw * ph;
        }
    }
    return sum;
}

/// Quadrature mass of the safe-policy density per grid cell. The density is
/// smooth inside each cell, so per-cell composite rules converge fast.
inline std::vector<double> per_cell_quadrature_mass(const SafePolicy& policy, int panels = 2) {
    std::vector<double> masses(static_cast<size_t>(policy.map.grid.cellCount()), 0.0);
    for (int c = 0; c < policy.map.grid.cellCount(); ++c) {
        masses[static_cast<size_t>(c)] = integrate_box(
            policy.map.grid.cell(c), [&](const Vec2& a) { return density(policy, a); }, panels);
    }
    return masses;
}

/// Quadrature of the density over the whole action box; equals 1 for any
/// well-formed safe policy.
inline double integrate_density(const SafePolicy& policy, int panels = 2) {
    double total = 0.0;
    for (double m : per_cell_quadrature_mass(policy, panels)) total += m;
    return total;
}

/// Exact per-cell mass of the safe policy, summing each branch's pre-safe
/// source-cell mass (Gaussian CDF products). Independent of the quadrature
/// route.
inline std::vector<double> per_cell_mass_exact(const SafePolicy& policy) {
    const GridPartition& grid = policy.map.grid;
    std::vector<double> masses(static_cast<size_t>(grid.cellCount()), 0.0);
    for (int c = 0; c < grid.cellCount(); ++c) {
        double m = 0.0;
        if (policy.map.cellIsIdentity(c)) m += policy.preSafe.cellMass(grid.cell(c));
        for (int k : policy.map.sourcesByTarget[static_cast<size_t>(c)]) {
            m += policy.preSafe.cellMass(grid.cell(k));
        }
        masses[static_cast<size_t>(c)] = m;
    }
    return masses;
}

}  // namespace failsafe
