#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

#include "failsafe/geometry.hpp"

namespace failsafe {

inline constexpr double kSqrt2Pi = 2.5066282746310002;

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

inline double logit(double s) { return std::log(s) - std::log1p(-s); }

/// Standard normal CDF.
inline double normal_cdf(double u) { return 0.5 * std::erfc(-u / 1.4142135623730951); }

/// Diagonal Gaussian in pre-squash space, mapped onto the open action box by
/// component-wise sigmoids. Parameters theta = (mean, logStd) live in the
/// pre-squash space; the squash Jacobian is part of the density.
struct PreSafeGaussian {
    Vec2 mean{0.0, 0.0};
    Vec2 logStd{0.0, 0.0};
    Box2 actionBox;

    double sigmaX() const { return std::exp(logStd.x); }
    double sigmaY() const { return std::exp(logStd.y); }

    Vec2 squash(const Vec2& z) const {
        return {actionBox.x.lo + actionBox.x.width() * sigmoid(z.x),
                actionBox.y.lo + actionBox.y.width() * sigmoid(z.y)};
    }

    /// Inverse of squash; callers must pass a point strictly inside the box.
    Vec2 unsquash(const Vec2& a) const {
        double sx = (a.x - actionBox.x.lo) / actionBox.x.width();
        double sy = (a.y - actionBox.y.lo) / actionBox.y.width();
        if (sx <= 0.0 || sx >= 1.0 || sy <= 0.0 || sy >= 1.0) {
            throw std::domain_error("PreSafeGaussian::unsquash: point not strictly inside box");
        }
        return {logit(sx), logit(sy)};
    }

    /// Density of the squashed Gaussian at a point of the open action box;
    /// zero on the boundary and outside.
    double density(const Vec2& a) const {
        double sx = (a.x - actionBox.x.lo) / actionBox.x.width();
        double sy = (a.y - actionBox.y.lo) / actionBox.y.width();
        if (sx <= 0.0 || sx >= 1.0 || sy <= 0.0 || sy >= 1.0) return 0.0;
        double zx = logit(sx), zy = logit(sy);
        double ux = (zx - mean.x) / sigmaX(), uy = (zy - mean.y) / sigmaY();
        double gauss = std::exp(-0.5 * (ux * ux + uy * uy)) /
                       (kSqrt2Pi * sigmaX() * kSqrt2Pi * sigmaY());
        double jac = 1.0 / (actionBox.x.width() * sx * (1.0 - sx)) *
                     1.0 / (actionBox.y.width() * sy * (1.0 - sy));
        return gauss * jac;
    }

    /// Exact pre-safe probability mass of an axis-aligned sub-box, via the
    /// Gaussian CDF in pre-squash coordinates.
    double cellMass(const Box2& cell) const {
        auto axisMass = [](double lo, double hi, double boxLo, double boxW, double mu,
                           double sigma) {
            double sLo = (lo - boxLo) / boxW, sHi = (hi - boxLo) / boxW;
            double cLo = sLo <= 0.0 ? 0.0 : normal_cdf((logit(sLo) - mu) / sigma);
            double cHi = sHi >= 1.0 ? 1.0 : normal_cdf((logit(sHi) - mu) / sigma);
            return cHi - cLo;
        };
        return axisMass(cell.x.lo, cell.x.hi, actionBox.x.lo, actionBox.x.width(), mean.x,
                        sigmaX()) *
               axisMass(cell.y.lo, cell.y.hi, actionBox.y.lo, actionBox.y.width(), mean.y,
                        sigmaY());
    }
};

/// Deterministic Gaussian stream (Box-Muller over a fixed 53-bit uniform),
/// reproducible bit-for-bit for a given seed on any platform.
struct GaussianSampler {
    std::mt19937_64 engine;

    explicit GaussianSampler(std::uint64_t seed = 0) : engine(seed) {}

    double uniform01() {
        return (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
    }

    Vec2 standardNormalPair() {
        double u1 = uniform01(), u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.141592653589793 * u2;
        return {r * std::cos(a), r * std::sin(a)};
    }
};

}  // namespace failsafe
