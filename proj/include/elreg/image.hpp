#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "elreg/errors.hpp"

namespace elreg {

// Which intensity scale the pixel values live on. Interpolating warps always
// reset the tag to ImageScale; only standardize() produces StandardScale data.
enum class ScaleTag { ImageScale, StandardScale };

/// 2D scalar intensity raster, row-major, double precision.
class ImageGrid {
public:
    ImageGrid() = default;

    ImageGrid(int width, int height, std::vector<double> data,
              ScaleTag scale = ScaleTag::ImageScale)
        : width_(width), height_(height), scale_(scale), data_(std::move(data)) {
        if (width_ < 1 || height_ < 1)
            raise(ErrorKind::DimensionTooSmall, "image dimensions must be >= 1");
        if (data_.size() != static_cast<size_t>(width_) * static_cast<size_t>(height_))
            raise(ErrorKind::DimensionMismatch,
                  "data length " + std::to_string(data_.size()) + " != " +
                      std::to_string(width_) + "x" + std::to_string(height_));
        for (double v : data_)
            if (!std::isfinite(v))
                raise(ErrorKind::InvalidParams, "non-finite intensity");
    }

    static ImageGrid filled(int width, int height, double value,
                            ScaleTag scale = ScaleTag::ImageScale) {
        return ImageGrid(width, height,
                         std::vector<double>(static_cast<size_t>(width) * height, value),
                         scale);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    size_t pixel_count() const { return data_.size(); }
    ScaleTag scale() const { return scale_; }
    void set_scale(ScaleTag s) { scale_ = s; }

    double at(int x, int y) const { return data_[static_cast<size_t>(y) * width_ + x]; }
    double& at(int x, int y) { return data_[static_cast<size_t>(y) * width_ + x]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool same_shape(const ImageGrid& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

    std::pair<double, double> min_max() const {
        auto [lo, hi] = std::minmax_element(data_.begin(), data_.end());
        return {*lo, *hi};
    }

private:
    int width_ = 0;
    int height_ = 0;
    ScaleTag scale_ = ScaleTag::ImageScale;
    std::vector<double> data_;
};

/// Spatial derivatives of the source image plus the temporal difference
/// against the target. All three grids share the source dimensions.
struct GradientTriple {
    ImageGrid fx;
    ImageGrid fy;
    ImageGrid ft;
};

/// Central differences in the interior, one-sided at the borders.
inline std::pair<ImageGrid, ImageGrid> spatial_gradients(const ImageGrid& img) {
    const int w = img.width(), h = img.height();
    if (w < 3 || h < 3)
        raise(ErrorKind::DimensionTooSmall, "spatial_gradients needs width, height >= 3");

    std::vector<double> gx(img.pixel_count()), gy(img.pixel_count());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const size_t i = static_cast<size_t>(y) * w + x;
            if (x == 0)
                gx[i] = img.at(1, y) - img.at(0, y);
            else if (x == w - 1)
                gx[i] = img.at(w - 1, y) - img.at(w - 2, y);
            else
                gx[i] = 0.5 * (img.at(x + 1, y) - img.at(x - 1, y));

            if (y == 0)
                gy[i] = img.at(x, 1) - img.at(x, 0);
            else if (y == h - 1)
                gy[i] = img.at(x, h - 1) - img.at(x, h - 2);
            else
                gy[i] = 0.5 * (img.at(x, y + 1) - img.at(x, y - 1));
        }
    }
    return {ImageGrid(w, h, std::move(gx), img.scale()),
            ImageGrid(w, h, std::move(gy), img.scale())};
}

/// ft(v) = source(v) - target(v). Both images must share shape and scale tag.
inline ImageGrid temporal_gradient(const ImageGrid& source, const ImageGrid& target) {
    if (!source.same_shape(target))
        raise(ErrorKind::DimensionMismatch, "temporal_gradient: shape mismatch");
    if (source.scale() != target.scale())
        raise(ErrorKind::ScaleMismatch, "temporal_gradient: scale tags differ");

    std::vector<double> d(source.pixel_count());
    for (size_t i = 0; i < d.size(); ++i)
        d[i] = source.data()[i] - target.data()[i];
    return ImageGrid(source.width(), source.height(), std::move(d), source.scale());
}

inline GradientTriple gradient_triple(const ImageGrid& source, const ImageGrid& target) {
    auto [fx, fy] = spatial_gradients(source);
    return GradientTriple{std::move(fx), std::move(fy), temporal_gradient(source, target)};
}

/// Mean of squared intensity differences. Callers are expected to pass
/// images already normalized to [0,1] when cross-scale comparability is
/// required; see normalized_mse in eval.hpp.
inline double mse(const ImageGrid& a, const ImageGrid& b) {
    if (!a.same_shape(b))
        raise(ErrorKind::DimensionMismatch, "mse: shape mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < a.pixel_count(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.pixel_count());
}

/// MSE on [0,1]-normalized copies: standard-scale pairs divide by scale_max
/// (s2), image-scale pairs by the joint maximum.
inline double normalized_mse(const ImageGrid& a, const ImageGrid& b, double scale_max) {
    if (!a.same_shape(b))
        raise(ErrorKind::DimensionMismatch, "normalized_mse: shape mismatch");
    const double denom = scale_max > 0 ? scale_max : 1.0;
    double acc = 0.0;
    for (size_t i = 0; i < a.pixel_count(); ++i) {
        const double d = (a.data()[i] - b.data()[i]) / denom;
        acc += d * d;
    }
    return acc / static_cast<double>(a.pixel_count());
}

} // namespace elreg
