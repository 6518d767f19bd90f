#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace failsafe {

struct Vec2 {
    double x{0.0};
    double y{0.0};

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }
};

inline double linf_norm(const Vec2& v) { return std::max(std::abs(v.x), std::abs(v.y)); }

/// Closed interval [lo, hi] on the real line.
struct Interval {
    double lo{0.0};
    double hi{0.0};

    Interval() = default;
    Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
        if (lo > hi) {
            throw std::invalid_argument("Interval: lo > hi (" + std::to_string(lo) + " > " +
                                        std::to_string(hi) + ")");
        }
    }

    double width() const { return hi - lo; }
    double center() const { return 0.5 * (lo + hi); }
    bool contains(double v) const { return lo <= v && v <= hi; }

    Interval inflated(double m) const { return {lo - m, hi + m}; }

    /// Clamps both endpoints into [bLo, bHi]; a fully outside interval collapses
    /// to the nearest boundary point.
    Interval clamped(double bLo, double bHi) const {
        double l = std::clamp(lo, bLo, bHi);
        double h = std::clamp(hi, bLo, bHi);
        return {std::min(l, h), std::max(l, h)};
    }
};

/// Axis-aligned rectangle.
struct Box2 {
    Interval x;
    Interval y;

    double area() const { return x.width() * y.width(); }
    Vec2 center() const { return {x.center(), y.center()}; }
    bool contains(const Vec2& p) const { return x.contains(p.x) && y.contains(p.y); }

    Box2 inflated(double mx, double my) const { return {x.inflated(mx), y.inflated(my)}; }
};

/// Signed l_inf gap between two boxes: max over axes of the per-axis signed
/// separation. Positive means the boxes are separated (and the value equals
/// their l_inf set distance); negative means they overlap along every axis,
/// with magnitude the smallest overlap depth.
inline double box_gap_linf(const Box2& a, const Box2& b) {
    double gx = std::max(b.x.lo - a.x.hi, a.x.lo - b.x.hi);
    double gy = std::max(b.y.lo - a.y.hi, a.y.lo - b.y.hi);
    return std::max(gx, gy);
}

/// Regular nx-by-ny tiling of a bounding box. Cells are indexed row-major:
/// cell(i, j) = nx*j + i. Cell membership is half-open per axis, except that
/// the global upper boundary belongs to the last row/column, so every point
/// of the bounds maps to exactly one cell.
struct GridPartition {
    Box2 bounds;
    int nx{1};
    int ny{1};

    GridPartition() = default;
    GridPartition(Box2 b, int nx_, int ny_) : bounds(b), nx(nx_), ny(ny_) {
        if (nx < 1 || ny < 1) throw std::invalid_argument("GridPartition: nx, ny must be >= 1");
    }

    int cellCount() const { return nx * ny; }
    double cellWidth() const { return bounds.x.width() / nx; }
    double cellHeight() const { return bounds.y.width() / ny; }

    /// Half of the larger cell side, i.e. the cell radius under the l_inf norm.
    double cellRadiusLinf() const { return 0.5 * std::max(cellWidth(), cellHeight()); }

    Box2 cell(int i, int j) const {
        double cw = cellWidth(), ch = cellHeight();
        double x0 = bounds.x.lo + i * cw;
        double y0 = bounds.y.lo + j * ch;
        double x1 = (i + 1 == nx) ? bounds.x.hi : bounds.x.lo + (i + 1) * cw;
        double y1 = (j + 1 == ny) ? bounds.y.hi : bounds.y.lo + (j + 1) * ch;
        return {Interval{x0, x1}, Interval{y0, y1}};
    }

    Box2 cell(int index) const { return cell(index % nx, index / nx); }

    Vec2 cellCenter(int index) const { return cell(index).center(); }

    int cellOf(const Vec2& a) const {
        if (!bounds.contains(a)) {
            throw std::domain_error("GridPartition::cellOf: point outside bounds");
        }
        int i = static_cast<int>(std::floor((a.x - bounds.x.lo) / cellWidth()));
        int j = static_cast<int>(std::floor((a.y - bounds.y.lo) / cellHeight()));
        i = std::clamp(i, 0, nx - 1);
        j = std::clamp(j, 0, ny - 1);
        return nx * j + i;
    }

    /// Half-open membership test consistent with cellOf.
    bool cellContains(int index, const Vec2& a) const {
        if (!bounds.contains(a)) return false;
        return cellOf(a) == index;
    }

    bool operator==(const GridPartition& o) const {
        return nx == o.nx && ny == o.ny && bounds.x.lo == o.bounds.x.lo &&
               bounds.x.hi == o.bounds.x.hi && bounds.y.lo == o.bounds.y.lo &&
               bounds.y.hi == o.bounds.y.hi;
    }
};

}  // namespace failsafe
