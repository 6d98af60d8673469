#pragma once

#include <utility>
#include <vector>

#include "elreg/field.hpp"
#include "elreg/image.hpp"

namespace elreg {

/// Gaussian multiresolution pyramid; levels[0] is the coarsest, the last
/// level is the unmodified input.
struct GaussianPyramid {
    std::vector<ImageGrid> levels;
    int depth = 0;

    const ImageGrid& coarsest() const { return levels.front(); }
    const ImageGrid& finest() const { return levels.back(); }
};

namespace detail {

// Separable 5-tap binomial smoothing (1,4,6,4,1)/16 with edge clamping,
// followed by decimation at even indices.
inline ImageGrid binomial_downsample(const ImageGrid& img) {
    const int w = img.width(), h = img.height();
    static constexpr double k[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

    std::vector<double> rows(img.pixel_count());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int t = -2; t <= 2; ++t) {
                const int xs = std::clamp(x + t, 0, w - 1);
                acc += k[t + 2] * img.at(xs, y);
            }
            rows[static_cast<size_t>(y) * w + x] = acc;
        }
    }

    const int ow = (w + 1) / 2, oh = (h + 1) / 2;
    std::vector<double> out(static_cast<size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int t = -2; t <= 2; ++t) {
                const int ys = std::clamp(2 * y + t, 0, h - 1);
                acc += k[t + 2] * rows[static_cast<size_t>(ys) * w + 2 * x];
            }
            out[static_cast<size_t>(y) * ow + x] = acc;
        }
    }
    return ImageGrid(ow, oh, std::move(out), img.scale());
}

} // namespace detail

/// Deepest pyramid that keeps the coarsest level at least 8x8.
inline int max_pyramid_depth(int width, int height) {
    int depth = 1;
    int w = width, h = height;
    while ((w + 1) / 2 >= 8 && (h + 1) / 2 >= 8) {
        w = (w + 1) / 2;
        h = (h + 1) / 2;
        ++depth;
    }
    return depth;
}

inline GaussianPyramid build_pyramid(const ImageGrid& img, int depth) {
    if (depth < 1) raise(ErrorKind::InvalidParams, "build_pyramid: depth must be >= 1");
    if (depth > max_pyramid_depth(img.width(), img.height()))
        raise(ErrorKind::TooManyLevels,
              "build_pyramid: coarsest level would fall under 8x8 (max depth " +
                  std::to_string(max_pyramid_depth(img.width(), img.height())) + ")");

    GaussianPyramid pyr;
    pyr.depth = depth;
    pyr.levels.resize(depth);
    pyr.levels[depth - 1] = img;
    for (int k = depth - 2; k >= 0; --k)
        pyr.levels[k] = detail::binomial_downsample(pyr.levels[k + 1]);
    return pyr;
}

/// Upsample a displacement field to the next finer level: bilinear
/// interpolation of the vectors, magnitudes doubled.
inline DeformationField promote_field(const DeformationField& field, int target_width,
                                      int target_height) {
    if ((target_width + 1) / 2 != field.width() || (target_height + 1) / 2 != field.height())
        raise(ErrorKind::DimensionMismatch,
              "promote_field: target is not the ceil-halving parent of the field");

    DeformationField out(target_width, target_height);
    for (int y = 0; y < target_height; ++y) {
        for (int x = 0; x < target_width; ++x) {
            double ux, uy;
            field.sample(0.5 * x, 0.5 * y, ux, uy);
            out.ux(x, y) = 2.0 * ux;
            out.uy(x, y) = 2.0 * uy;
        }
    }
    return out;
}

} // namespace elreg
