#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "elreg/affine.hpp"
#include "elreg/errors.hpp"

namespace elreg {

/// Per-pixel displacement vectors u(v), stored interleaved (ux, uy).
/// Backward-warp semantics throughout: the warped image samples the source
/// at v + u(v).
class DeformationField {
public:
    DeformationField() = default;

    DeformationField(int width, int height)
        : width_(width), height_(height),
          u_(static_cast<size_t>(width) * height * 2, 0.0) {
        if (width_ < 1 || height_ < 1)
            raise(ErrorKind::DimensionTooSmall, "field dimensions must be >= 1");
    }

    DeformationField(int width, int height, std::vector<double> interleaved)
        : width_(width), height_(height), u_(std::move(interleaved)) {
        if (width_ < 1 || height_ < 1)
            raise(ErrorKind::DimensionTooSmall, "field dimensions must be >= 1");
        if (u_.size() != static_cast<size_t>(width_) * height_ * 2)
            raise(ErrorKind::DimensionMismatch, "field data length mismatch");
        for (double v : u_)
            if (!std::isfinite(v)) raise(ErrorKind::InvalidParams, "non-finite displacement");
    }

    int width() const { return width_; }
    int height() const { return height_; }

    double ux(int x, int y) const { return u_[idx(x, y)]; }
    double uy(int x, int y) const { return u_[idx(x, y) + 1]; }
    double& ux(int x, int y) { return u_[idx(x, y)]; }
    double& uy(int x, int y) { return u_[idx(x, y) + 1]; }

    const std::vector<double>& data() const { return u_; }
    std::vector<double>& data() { return u_; }

    bool same_shape(const DeformationField& o) const {
        return width_ == o.width_ && height_ == o.height_;
    }

    /// Bilinear sample with edge clamping, per component.
    void sample(double x, double y, double& ox, double& oy) const {
        x = std::clamp(x, 0.0, static_cast<double>(width_ - 1));
        y = std::clamp(y, 0.0, static_cast<double>(height_ - 1));
        const int x0 = static_cast<int>(std::floor(x));
        const int y0 = static_cast<int>(std::floor(y));
        const int x1 = std::min(x0 + 1, width_ - 1);
        const int y1 = std::min(y0 + 1, height_ - 1);
        const double tx = x - x0, ty = y - y0;
        ox = (1 - ty) * ((1 - tx) * ux(x0, y0) + tx * ux(x1, y0)) +
             ty * ((1 - tx) * ux(x0, y1) + tx * ux(x1, y1));
        oy = (1 - ty) * ((1 - tx) * uy(x0, y0) + tx * uy(x1, y0)) +
             ty * ((1 - tx) * uy(x0, y1) + tx * uy(x1, y1));
    }

    double rms() const {
        double acc = 0.0;
        const size_t n = u_.size() / 2;
        for (size_t i = 0; i < n; ++i)
            acc += u_[2 * i] * u_[2 * i] + u_[2 * i + 1] * u_[2 * i + 1];
        return std::sqrt(acc / static_cast<double>(n));
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : u_) m = std::max(m, std::abs(v));
        return m;
    }

    void scale(double s) {
        for (double& v : u_) v *= s;
    }

private:
    size_t idx(int x, int y) const {
        return (static_cast<size_t>(y) * width_ + x) * 2;
    }

    int width_ = 0, height_ = 0;
    std::vector<double> u_;
};

/// Displacement field induced by an affine transform: u(v) = A.v - v.
inline DeformationField field_from_affine(const AffineParams& a, int width, int height) {
    DeformationField f(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double ox, oy;
            a.apply(x, y, ox, oy);
            f.ux(x, y) = ox - x;
            f.uy(x, y) = oy - y;
        }
    }
    return f;
}

/// Composition under backward warping: warping by `older` and then by
/// `newer` equals one warp by the returned field,
/// u(v) = u_new(v) + u_old(v + u_new(v)).
inline DeformationField compose_fields(const DeformationField& newer,
                                       const DeformationField& older) {
    if (!newer.same_shape(older))
        raise(ErrorKind::DimensionMismatch, "compose_fields: shape mismatch");
    DeformationField out(newer.width(), newer.height());
    for (int y = 0; y < newer.height(); ++y) {
        for (int x = 0; x < newer.width(); ++x) {
            const double nx = newer.ux(x, y), ny = newer.uy(x, y);
            double ox, oy;
            older.sample(x + nx, y + ny, ox, oy);
            out.ux(x, y) = nx + ox;
            out.uy(x, y) = ny + oy;
        }
    }
    return out;
}

/// r.m.s. of |u_est - u_truth| over all pixels, in pixels.
inline double displacement_error(const DeformationField& est, const DeformationField& truth) {
    if (!est.same_shape(truth))
        raise(ErrorKind::DimensionMismatch, "displacement_error: shape mismatch");
    double acc = 0.0;
    for (int y = 0; y < est.height(); ++y) {
        for (int x = 0; x < est.width(); ++x) {
            const double dx = est.ux(x, y) - truth.ux(x, y);
            const double dy = est.uy(x, y) - truth.uy(x, y);
            acc += dx * dx + dy * dy;
        }
    }
    return std::sqrt(acc / (static_cast<double>(est.width()) * est.height()));
}

} // namespace elreg
