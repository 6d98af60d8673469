#pragma once

#include <array>
#include <cmath>
#include <string>

#include "elreg/affine.hpp"
#include "elreg/image.hpp"

namespace elreg {

using Mat6 = std::array<std::array<double, 6>, 6>;

/// Gradient-weighted coordinate vector
/// (x.fx, y.fx, fx, x.fy, y.fy, fy).
inline Vec6 build_omega(double fx, double fy, double x, double y) {
    return {x * fx, y * fx, fx, x * fy, y * fy, fy};
}

/// The 6x6 system M.a = b of the linearized least-squares problem,
/// M = sum of Omega.Omega^T over the domain.
struct NormalEquations {
    Mat6 M{};
    Vec6 b{};
    long pixel_count = 0;
};

/// Inclusive-exclusive pixel rectangle [x0,x1) x [y0,y1).
struct PixelRect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    long area() const { return static_cast<long>(x1 - x0) * (y1 - y0); }

    static PixelRect full(const ImageGrid& img) {
        return {0, 0, img.width(), img.height()};
    }
};

/// Accumulates M = sum Omega.Omega^T and b = sum Omega.r over the domain,
/// with r = fx.x + fy.y - ft. The sign of the ft term is paired with
/// ft = source - target so that the solved transform maps the (warped)
/// source toward the target; a = vec(identity) is the zero-motion solution.
inline NormalEquations accumulate_normal_equations(const GradientTriple& grads,
                                                   const PixelRect& rect) {
    const int w = grads.fx.width(), h = grads.fx.height();
    if (rect.x0 < 0 || rect.y0 < 0 || rect.x1 > w || rect.y1 > h || rect.x0 >= rect.x1 ||
        rect.y0 >= rect.y1)
        raise(ErrorKind::InvalidParams, "accumulate_normal_equations: rect out of bounds");
    if (rect.area() < 6)
        raise(ErrorKind::DomainTooSmall, "accumulate_normal_equations: domain area < 6");

    NormalEquations ne;
    ne.pixel_count = rect.area();
    for (int y = rect.y0; y < rect.y1; ++y) {
        for (int x = rect.x0; x < rect.x1; ++x) {
            const Vec6 om = build_omega(grads.fx.at(x, y), grads.fy.at(x, y),
                                        static_cast<double>(x), static_cast<double>(y));
            const double r = om[0] + om[4] - grads.ft.at(x, y);
            for (int i = 0; i < 6; ++i) {
                for (int j = i; j < 6; ++j) ne.M[i][j] += om[i] * om[j];
                ne.b[i] += om[i] * r;
            }
        }
    }
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < i; ++j) ne.M[i][j] = ne.M[j][i];
    return ne;
}

namespace detail {

// Eigenvalues of a symmetric 6x6 matrix by cyclic Jacobi rotations.
inline Vec6 symmetric_eigenvalues(Mat6 a) {
    for (int sweep = 0; sweep < 32; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < 6; ++p)
            for (int q = p + 1; q < 6; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-300) break;

        for (int p = 0; p < 6; ++p) {
            for (int q = p + 1; q < 6; ++q) {
                if (a[p][q] == 0.0) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < 6; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < 6; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    return {a[0][0], a[1][1], a[2][2], a[3][3], a[4][4], a[5][5]};
}

// LDL^T factorization; returns false on a non-positive pivot.
inline bool ldlt_factor(const Mat6& m, Mat6& l, Vec6& d) {
    for (int j = 0; j < 6; ++j) {
        double dj = m[j][j];
        for (int k = 0; k < j; ++k) dj -= l[j][k] * l[j][k] * d[k];
        if (!(dj > 0.0)) return false;
        d[j] = dj;
        l[j][j] = 1.0;
        for (int i = j + 1; i < 6; ++i) {
            double v = m[i][j];
            for (int k = 0; k < j; ++k) v -= l[i][k] * l[j][k] * d[k];
            l[i][j] = v / dj;
        }
    }
    return true;
}

inline Vec6 ldlt_solve(const Mat6& l, const Vec6& d, Vec6 b) {
    for (int i = 0; i < 6; ++i)
        for (int k = 0; k < i; ++k) b[i] -= l[i][k] * b[k];
    for (int i = 0; i < 6; ++i) b[i] /= d[i];
    for (int i = 5; i >= 0; --i)
        for (int k = i + 1; k < 6; ++k) b[i] -= l[k][i] * b[k];
    return b;
}

// Solves M.x = b for symmetric positive definite M: diagonal equilibration,
// LDL^T, then two steps of iterative refinement with extended-precision
// residuals. Throws IllConditioned on a failed factorization.
inline Vec6 solve_spd6(const Mat6& m, const Vec6& b, const char* who) {
    Vec6 scale;
    for (int i = 0; i < 6; ++i) scale[i] = m[i][i] > 0.0 ? 1.0 / std::sqrt(m[i][i]) : 1.0;

    Mat6 ms;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) ms[i][j] = m[i][j] * scale[i] * scale[j];

    Mat6 l{};
    Vec6 d{};
    if (!ldlt_factor(ms, l, d))
        raise(ErrorKind::IllConditioned, std::string(who) + ": LDLT pivot failure");

    Vec6 bs;
    for (int i = 0; i < 6; ++i) bs[i] = b[i] * scale[i];
    Vec6 xs = ldlt_solve(l, d, bs);

    for (int pass = 0; pass < 2; ++pass) {
        Vec6 r;
        for (int i = 0; i < 6; ++i) {
            long double acc = bs[i];
            for (int j = 0; j < 6; ++j)
                acc -= static_cast<long double>(ms[i][j]) * xs[j];
            r[i] = static_cast<double>(acc);
        }
        const Vec6 dx = ldlt_solve(l, d, r);
        for (int i = 0; i < 6; ++i) xs[i] += dx[i];
    }

    Vec6 x;
    for (int i = 0; i < 6; ++i) x[i] = xs[i] * scale[i];
    return x;
}

} // namespace detail

/// Closed-form minimizer of the linearized registration error. Signals
/// IllConditioned (textureless or degenerate data) when the smallest
/// eigenvalue of M falls below 1e-10 times the largest.
inline AffineParams solve_affine(const NormalEquations& ne) {
    const Vec6 eig = detail::symmetric_eigenvalues(ne.M);
    double lo = eig[0], hi = eig[0];
    for (double e : eig) {
        lo = std::min(lo, e);
        hi = std::max(hi, e);
    }
    if (!(hi > 0.0) || lo < 1e-10 * hi)
        raise(ErrorKind::IllConditioned,
              "solve_affine: eigenvalue ratio below 1e-10 (textureless or degenerate data)");

    return AffineParams::from_vec(detail::solve_spd6(ne.M, ne.b, "solve_affine"));
}

} // namespace elreg
