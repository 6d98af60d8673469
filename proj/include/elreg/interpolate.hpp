#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "elreg/image.hpp"

namespace elreg {

enum class InterpMethod { Bilinear, CubicSpline };

inline const char* to_string(InterpMethod m) {
    return m == InterpMethod::Bilinear ? "bilinear" : "cubic";
}

namespace detail {

// Recursive prefilter turning samples into interpolating cubic B-spline
// coefficients (single pole z = sqrt(3) - 2, whole-sample mirror boundary).
inline void cubic_prefilter_line(double* c, size_t n, size_t stride) {
    if (n == 1) return;
    constexpr double z = -0.26794919243112270647; // sqrt(3) - 2
    constexpr double gain = 6.0;                  // (1 - z) * (1 - 1/z)

    for (size_t i = 0; i < n; ++i) c[i * stride] *= gain;

    // causal init: exact mirrored sum, truncated once |z|^k falls below 1e-17
    const size_t horizon = 30;
    double sum;
    if (horizon < n) {
        double zk = z;
        sum = c[0];
        for (size_t k = 1; k < horizon; ++k) {
            sum += zk * c[k * stride];
            zk *= z;
        }
    } else {
        double zk = z;
        double z2k = std::pow(z, static_cast<double>(n - 1));
        const double z_last = z2k;
        sum = c[0] + z2k * c[(n - 1) * stride];
        z2k = z2k * z2k / z;
        for (size_t k = 1; k + 1 < n; ++k) {
            sum += (zk + z2k) * c[k * stride];
            zk *= z;
            z2k /= z;
        }
        sum /= (1.0 - z_last * z_last);
    }
    c[0] = sum;
    for (size_t i = 1; i < n; ++i) c[i * stride] += z * c[(i - 1) * stride];

    // anticausal
    c[(n - 1) * stride] =
        (z / (z * z - 1.0)) * (z * c[(n - 2) * stride] + c[(n - 1) * stride]);
    for (size_t i = n - 1; i-- > 0;) c[i * stride] = z * (c[(i + 1) * stride] - c[i * stride]);
}

// Whole-sample mirror index, matching the prefilter boundary condition.
inline int mirror_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i = std::abs(i) % period;
    return i < n ? i : period - i;
}

} // namespace detail

/// Samples an image at real-valued coordinates. Bilinear reads the raw
/// samples; CubicSpline prefilters once at construction so that the spline
/// interpolates the samples exactly. Query coordinates outside the grid are
/// clamped to the image rectangle (edge extension).
class Interpolator {
public:
    Interpolator(const ImageGrid& img, InterpMethod method)
        : w_(img.width()), h_(img.height()), method_(method), samples_(img.data()) {
        if (method_ == InterpMethod::CubicSpline) {
            coeff_ = samples_;
            for (int y = 0; y < h_; ++y)
                detail::cubic_prefilter_line(coeff_.data() + static_cast<size_t>(y) * w_,
                                             static_cast<size_t>(w_), 1);
            for (int x = 0; x < w_; ++x)
                detail::cubic_prefilter_line(coeff_.data() + x, static_cast<size_t>(h_),
                                             static_cast<size_t>(w_));
        }
    }

    InterpMethod method() const { return method_; }

    double operator()(double x, double y) const {
        x = std::clamp(x, 0.0, static_cast<double>(w_ - 1));
        y = std::clamp(y, 0.0, static_cast<double>(h_ - 1));

        const double xf = std::floor(x), yf = std::floor(y);
        if (x == xf && y == yf) // reproduce stored samples bit-exactly
            return samples_[static_cast<size_t>(yf) * w_ + static_cast<size_t>(xf)];

        return method_ == InterpMethod::Bilinear ? bilinear(x, y) : cubic(x, y);
    }

private:
    double bilinear(double x, double y) const {
        const int x0 = static_cast<int>(std::floor(x));
        const int y0 = static_cast<int>(std::floor(y));
        const int x1 = std::min(x0 + 1, w_ - 1);
        const int y1 = std::min(y0 + 1, h_ - 1);
        const double tx = x - x0, ty = y - y0;
        const double v00 = samples_[static_cast<size_t>(y0) * w_ + x0];
        const double v10 = samples_[static_cast<size_t>(y0) * w_ + x1];
        const double v01 = samples_[static_cast<size_t>(y1) * w_ + x0];
        const double v11 = samples_[static_cast<size_t>(y1) * w_ + x1];
        return (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) +
               ty * ((1.0 - tx) * v01 + tx * v11);
    }

    double cubic(double x, double y) const {
        const int ix = static_cast<int>(std::floor(x));
        const int iy = static_cast<int>(std::floor(y));
        const double tx = x - ix, ty = y - iy;

        double wx[4], wy[4];
        bspline_weights(tx, wx);
        bspline_weights(ty, wy);

        double acc = 0.0;
        for (int dy = -1; dy <= 2; ++dy) {
            const int ym = detail::mirror_index(iy + dy, h_);
            double row = 0.0;
            for (int dx = -1; dx <= 2; ++dx) {
                const int xm = detail::mirror_index(ix + dx, w_);
                row += wx[dx + 1] * coeff_[static_cast<size_t>(ym) * w_ + xm];
            }
            acc += wy[dy + 1] * row;
        }
        return acc;
    }

    static void bspline_weights(double t, double w[4]) {
        const double s = 1.0 - t;
        w[0] = s * s * s / 6.0;
        w[1] = (4.0 - 6.0 * t * t + 3.0 * t * t * t) / 6.0;
        w[2] = (1.0 + 3.0 * t + 3.0 * t * t - 3.0 * t * t * t) / 6.0;
        w[3] = t * t * t / 6.0;
    }

    int w_, h_;
    InterpMethod method_;
    std::vector<double> samples_;
    std::vector<double> coeff_;
};

/// One-off sampling convenience. For per-pixel loops build an Interpolator
/// once; the cubic variant prefilters the whole image per construction.
inline double interpolate(const ImageGrid& img, double x, double y, InterpMethod method) {
    return Interpolator(img, method)(x, y);
}

} // namespace elreg
