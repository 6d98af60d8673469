#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "elreg/affine.hpp"
#include "elreg/field.hpp"
#include "elreg/image.hpp"

namespace elreg {

enum class WarpKind { Affine, Nonlinear };

/// Parameters of one synthetic deformation: either a random affine or the
/// eight-parameter sinusoidal map, plus the r.m.s. displacement it was
/// normalized to and the seed that produced it.
struct WarpSpec {
    WarpKind kind = WarpKind::Affine;
    AffineParams affine;
    std::array<double, 8> n{}; // n1..n8 of the sinusoidal map
    double rms_target = 12.0;
    uint64_t seed = 0;
};

namespace detail {

// Deterministic uniform helper; draws do not depend on library
// distribution internals.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int coin() { return static_cast<int>(gen_() & 1u); }

private:
    std::mt19937_64 gen_;
};

} // namespace detail

/// Identity plus uniform perturbations, linearly rescaled so the measured
/// r.m.s. displacement over the grid equals rms_target exactly.
inline AffineParams random_affine_warp(int width, int height, double rms_target,
                                       uint64_t seed) {
    if (rms_target <= 0) raise(ErrorKind::InvalidParams, "random_affine_warp: rms_target <= 0");
    detail::Rng rng(seed);
    Vec6 delta{rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.uniform(-4.0, 4.0),
               rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.uniform(-4.0, 4.0)};

    const Vec6 identity = AffineParams::identity().to_vec();
    Vec6 v;
    for (int i = 0; i < 6; ++i) v[i] = identity[i] + delta[i];
    const double measured =
        affine_rms_displacement(AffineParams::from_vec(v), width, height);
    if (measured <= 0.0) return AffineParams::identity();

    const double s = rms_target / measured; // displacement is linear in the perturbation
    for (int i = 0; i < 6; ++i) v[i] = identity[i] + s * delta[i];
    return AffineParams::from_vec(v);
}

/// Displacement extracted literally from the sinusoidal coordinate map:
///   x' = n1.x + (-1)^n2 . e^n3 . sin(y/n4)
///   y' = n5.x + (-1)^n6 . e^n7 . cos(y/n8)
/// with u = (x' - x, y' - y). Note the second coordinate carries no y term,
/// so u_y contains -y; the random generator restores the y identity (see
/// random_nonlinear_warp). amplitude_override replaces the (-1)^n.e^n
/// factors, letting callers zero individual terms.
inline DeformationField nonlinear_field(
    int width, int height, const std::array<double, 8>& n,
    std::optional<std::pair<double, double>> amplitude_override = {}) {
    if (n[3] == 0.0 || n[7] == 0.0)
        raise(ErrorKind::InvalidParams, "nonlinear_field: n4 and n8 must be nonzero");

    const double sign_x = std::llround(n[1]) % 2 == 0 ? 1.0 : -1.0;
    const double sign_y = std::llround(n[5]) % 2 == 0 ? 1.0 : -1.0;
    const double amp_x = amplitude_override ? amplitude_override->first
                                            : sign_x * std::exp(n[2]);
    const double amp_y = amplitude_override ? amplitude_override->second
                                            : sign_y * std::exp(n[6]);

    DeformationField f(width, height);
    for (int y = 0; y < height; ++y) {
        const double sx = amp_x * std::sin(y / n[3]);
        const double sy = amp_y * std::cos(y / n[7]);
        for (int x = 0; x < width; ++x) {
            f.ux(x, y) = (n[0] - 1.0) * x + sx;
            f.uy(x, y) = n[4] * x + sy - y;
        }
    }
    return f;
}

namespace detail {

// The displacement actually applied by the random generator: as the literal
// map above but with the y identity kept, so u_y = n5.x + amp_y.cos(y/n8).
inline DeformationField sinusoidal_displacement(int width, int height,
                                                const std::array<double, 8>& n) {
    const double sign_x = std::llround(n[1]) % 2 == 0 ? 1.0 : -1.0;
    const double sign_y = std::llround(n[5]) % 2 == 0 ? 1.0 : -1.0;
    const double amp_x = sign_x * std::exp(n[2]);
    const double amp_y = sign_y * std::exp(n[6]);

    DeformationField f(width, height);
    for (int y = 0; y < height; ++y) {
        const double sx = amp_x * std::sin(y / n[3]);
        const double sy = amp_y * std::cos(y / n[7]);
        for (int x = 0; x < width; ++x) {
            f.ux(x, y) = (n[0] - 1.0) * x + sx;
            f.uy(x, y) = n[4] * x + sy;
        }
    }
    return f;
}

} // namespace detail

/// Draws the eight sinusoidal-warp parameters from their documented ranges.
inline WarpSpec draw_nonlinear_spec(double rms_target, uint64_t seed) {
    detail::Rng rng(seed);
    WarpSpec spec;
    spec.kind = WarpKind::Nonlinear;
    spec.rms_target = rms_target;
    spec.seed = seed;
    spec.n[0] = rng.uniform(0.95, 1.05);                  // x scale
    spec.n[1] = rng.coin();                               // sign exponent
    spec.n[2] = rng.uniform(0.0, 2.0);                    // x amplitude exponent
    spec.n[3] = rng.uniform(4.0, 16.0);                   // x wavelength divisor
    spec.n[4] = rng.uniform(-0.05, 0.05);                 // shear
    spec.n[5] = rng.coin();
    spec.n[6] = rng.uniform(0.0, 2.0);
    spec.n[7] = rng.uniform(4.0, 16.0);
    return spec;
}

/// Random sinusoidal deformation field, linearly rescaled so its r.m.s.
/// displacement equals rms_target. Deterministic given the seed.
inline DeformationField random_nonlinear_warp(int width, int height, double rms_target,
                                              uint64_t seed) {
    if (rms_target <= 0)
        raise(ErrorKind::InvalidParams, "random_nonlinear_warp: rms_target <= 0");
    const WarpSpec spec = draw_nonlinear_spec(rms_target, seed);
    DeformationField f = detail::sinusoidal_displacement(width, height, spec.n);
    const double measured = f.rms();
    if (measured > 0.0) f.scale(rms_target / measured);
    return f;
}

// ---------------------------------------------------------------------------
// Deterministic test images
// ---------------------------------------------------------------------------

/// Smooth full-frame texture: a sum of random Gaussian bumps, normalized to
/// [5, 250]. Gives usable gradients everywhere; suitable for registration
/// experiments.
inline ImageGrid make_texture(int width, int height, uint64_t seed, int bumps = 60) {
    detail::Rng rng(seed);
    std::vector<double> img(static_cast<size_t>(width) * height, 0.0);
    for (int b = 0; b < bumps; ++b) {
        const double cx = rng.uniform(0.0, width - 1.0);
        const double cy = rng.uniform(0.0, height - 1.0);
        const double sigma = rng.uniform(0.04, 0.12) * std::max(width, height);
        const double amp = rng.uniform(-1.0, 1.0);
        const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
        const int x0 = std::max(0, static_cast<int>(cx - 4 * sigma));
        const int x1 = std::min(width - 1, static_cast<int>(cx + 4 * sigma));
        const int y0 = std::max(0, static_cast<int>(cy - 4 * sigma));
        const int y1 = std::min(height - 1, static_cast<int>(cy + 4 * sigma));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                img[static_cast<size_t>(y) * width + x] += amp * std::exp(-d2 * inv2s2);
            }
        }
    }
    const auto [lo_it, hi_it] = std::minmax_element(img.begin(), img.end());
    const double lo = *lo_it, hi = *hi_it;
    const double span = hi - lo > 0 ? hi - lo : 1.0;
    for (double& v : img) v = 5.0 + (v - lo) / span * 245.0;
    return ImageGrid(width, height, std::move(img));
}

/// Head-like phantom with a bimodal histogram: constant dark background and
/// an elliptical foreground whose interior carries smooth texture around a
/// dominant tissue level.
inline ImageGrid make_phantom(int width, int height, uint64_t seed,
                              double background = 6.0, double foreground = 180.0) {
    detail::Rng rng(seed);
    const ImageGrid texture = make_texture(width, height, seed ^ 0x9e3779b97f4a7c15ull, 40);
    std::vector<double> img(static_cast<size_t>(width) * height, background);
    const double cx = 0.5 * (width - 1), cy = 0.5 * (height - 1);
    const double ax = rng.uniform(0.36, 0.44) * width;
    const double ay = rng.uniform(0.36, 0.44) * height;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double ex = (x - cx) / ax, ey = (y - cy) / ay;
            const double r2 = ex * ex + ey * ey;
            if (r2 <= 1.0) {
                // texture in [5,250] recentered to +-35 around the tissue level
                const double t = (texture.at(x, y) - 127.5) * (70.0 / 245.0);
                const double edge = std::min(1.0, 6.0 * (1.0 - std::sqrt(r2)));
                img[static_cast<size_t>(y) * width + x] =
                    background + edge * (foreground + t - background);
            }
        }
    }
    return ImageGrid(width, height, std::move(img));
}

} // namespace elreg
