#pragma once

#include <cmath>
#include <vector>

#include "elreg/affine.hpp"
#include "elreg/field.hpp"
#include "elreg/image.hpp"
#include "elreg/interpolate.hpp"

namespace elreg {

/// Backward affine warp: output(v) = img(A.v). Interpolation invalidates any
/// standardization, so the result is tagged ImageScale; callers on the
/// standard scale re-standardize afterwards.
inline ImageGrid warp_affine(const ImageGrid& img, const AffineParams& a,
                             InterpMethod method) {
    if (std::abs(a.det()) < 1e-12)
        raise(ErrorKind::SingularTransform, "warp_affine: |det| < 1e-12");

    const Interpolator interp(img, method);
    std::vector<double> out(img.pixel_count());
    const int w = img.width(), h = img.height();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double sx, sy;
            a.apply(x, y, sx, sy);
            out[static_cast<size_t>(y) * w + x] = interp(sx, sy);
        }
    }
    return ImageGrid(w, h, std::move(out), ScaleTag::ImageScale);
}

/// Backward field warp: output(v) = img(v + u(v)).
inline ImageGrid warp_field(const ImageGrid& img, const DeformationField& field,
                            InterpMethod method) {
    if (field.width() != img.width() || field.height() != img.height())
        raise(ErrorKind::DimensionMismatch, "warp_field: field/image shape mismatch");

    const Interpolator interp(img, method);
    std::vector<double> out(img.pixel_count());
    const int w = img.width(), h = img.height();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            out[static_cast<size_t>(y) * w + x] =
                interp(x + field.ux(x, y), y + field.uy(x, y));
        }
    }
    return ImageGrid(w, h, std::move(out), ScaleTag::ImageScale);
}

} // namespace elreg
