#pragma once

#include <array>
#include <cmath>
#include <string>

#include "elreg/errors.hpp"

namespace elreg {

using Vec6 = std::array<double, 6>;

/// 2D affine map in homogeneous form
///
///     [ a1 a2 a3 ]   [x]
///     [ a4 a5 a6 ] . [y]
///     [ 0  0  1  ]   [1]
///
/// stored as the six free entries a1..a6. The two intensity parameters of the
/// general model are held fixed (gain 1, offset 0): intensity variation is
/// handled by standardization, not by the transform.
struct AffineParams {
    double a1 = 1.0, a2 = 0.0, a3 = 0.0;
    double a4 = 0.0, a5 = 1.0, a6 = 0.0;

    static constexpr double intensity_gain = 1.0;   // a7
    static constexpr double intensity_offset = 0.0; // a8

    static AffineParams identity() { return {}; }

    static AffineParams translation(double tx, double ty) {
        return {1.0, 0.0, tx, 0.0, 1.0, ty};
    }

    static AffineParams from_vec(const Vec6& v) {
        return {v[0], v[1], v[2], v[3], v[4], v[5]};
    }

    Vec6 to_vec() const { return {a1, a2, a3, a4, a5, a6}; }

    void apply(double x, double y, double& ox, double& oy) const {
        ox = a1 * x + a2 * y + a3;
        oy = a4 * x + a5 * y + a6;
    }

    double det() const { return a1 * a5 - a2 * a4; }

    /// this ∘ other: (this * other)(v) = this(other(v)) as matrices.
    AffineParams compose(const AffineParams& o) const {
        return {a1 * o.a1 + a2 * o.a4, a1 * o.a2 + a2 * o.a5, a1 * o.a3 + a2 * o.a6 + a3,
                a4 * o.a1 + a5 * o.a4, a4 * o.a2 + a5 * o.a5, a4 * o.a3 + a5 * o.a6 + a6};
    }

    AffineParams inverse() const {
        const double d = det();
        if (std::abs(d) < 1e-12)
            raise(ErrorKind::SingularTransform, "affine inverse: |det| < 1e-12");
        const double i1 = a5 / d, i2 = -a2 / d, i4 = -a4 / d, i5 = a1 / d;
        return {i1, i2, -(i1 * a3 + i2 * a6), i4, i5, -(i4 * a3 + i5 * a6)};
    }

    double max_abs_diff(const AffineParams& o) const {
        double m = 0.0;
        const Vec6 a = to_vec(), b = o.to_vec();
        for (int i = 0; i < 6; ++i) m = std::max(m, std::abs(a[i] - b[i]));
        return m;
    }
};

/// Transfer to the next finer pyramid level: linear part unchanged,
/// translations doubled (fine coords are twice the coarse coords).
inline AffineParams promote_affine(const AffineParams& a) {
    return {a.a1, a.a2, 2.0 * a.a3, a.a4, a.a5, 2.0 * a.a6};
}

/// Inverse of promote_affine: expresses a transform one level coarser.
inline AffineParams demote_affine(const AffineParams& a) {
    return {a.a1, a.a2, 0.5 * a.a3, a.a4, a.a5, 0.5 * a.a6};
}

/// r.m.s. of |A.v - v| over a width x height pixel grid.
inline double affine_rms_displacement(const AffineParams& a, int width, int height) {
    double acc = 0.0;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double ox, oy;
            a.apply(x, y, ox, oy);
            const double dx = ox - x, dy = oy - y;
            acc += dx * dx + dy * dy;
        }
    }
    return std::sqrt(acc / (static_cast<double>(width) * height));
}

} // namespace elreg
