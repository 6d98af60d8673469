#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "elreg/field.hpp"
#include "elreg/normal_equations.hpp"
#include "elreg/register_global.hpp"

namespace elreg {

/// Per-pixel 6-parameter affine maps, the unknowns of the locally affine,
/// globally smooth model.
class LocalAffineField {
public:
    LocalAffineField() = default;

    LocalAffineField(int width, int height, const Vec6& init)
        : width_(width), height_(height),
          params_(static_cast<size_t>(width) * height, init) {
        if (width_ < 1 || height_ < 1)
            raise(ErrorKind::DimensionTooSmall, "local field dimensions must be >= 1");
    }

    static LocalAffineField identity(int width, int height) {
        return LocalAffineField(width, height, AffineParams::identity().to_vec());
    }

    int width() const { return width_; }
    int height() const { return height_; }

    const Vec6& at(int x, int y) const { return params_[static_cast<size_t>(y) * width_ + x]; }
    Vec6& at(int x, int y) { return params_[static_cast<size_t>(y) * width_ + x]; }

    /// Component-wise mean over the window of given odd size centered at
    /// (x, y), clipped to the grid.
    Vec6 window_mean(int x, int y, int window) const {
        const int r = window / 2;
        const int x0 = std::max(0, x - r), x1 = std::min(width_ - 1, x + r);
        const int y0 = std::max(0, y - r), y1 = std::min(height_ - 1, y + r);
        Vec6 acc{};
        for (int yy = y0; yy <= y1; ++yy)
            for (int xx = x0; xx <= x1; ++xx) {
                const Vec6& a = at(xx, yy);
                for (int i = 0; i < 6; ++i) acc[i] += a[i];
            }
        const double n = static_cast<double>((x1 - x0 + 1) * (y1 - y0 + 1));
        for (int i = 0; i < 6; ++i) acc[i] /= n;
        return acc;
    }

    double max_abs_diff(const LocalAffineField& o) const {
        double m = 0.0;
        for (size_t i = 0; i < params_.size(); ++i)
            for (int k = 0; k < 6; ++k)
                m = std::max(m, std::abs(params_[i][k] - o.params_[i][k]));
        return m;
    }

private:
    int width_ = 0, height_ = 0;
    std::vector<Vec6> params_;
};

/// Diagonal smoothness weights, the Lambda matrix of the coupled update.
/// All zeros reduces the update to the plain windowed least-squares solve.
struct SmoothnessWeights {
    Vec6 lambda{};

    static SmoothnessWeights uniform(double l) { return {{l, l, l, l, l, l}}; }

    bool all_zero() const {
        for (double l : lambda)
            if (l != 0.0) return false;
        return true;
    }
};

/// Sum over pixels and components of lambda_i * |forward gradient of the
/// a_i plane|^2. Zero iff every weighted parameter plane is constant.
inline double smoothness_energy(const LocalAffineField& field, const SmoothnessWeights& w) {
    double e = 0.0;
    for (int y = 0; y < field.height(); ++y) {
        for (int x = 0; x < field.width(); ++x) {
            const Vec6& a = field.at(x, y);
            if (x + 1 < field.width()) {
                const Vec6& ax = field.at(x + 1, y);
                for (int i = 0; i < 6; ++i) {
                    const double d = ax[i] - a[i];
                    e += w.lambda[i] * d * d;
                }
            }
            if (y + 1 < field.height()) {
                const Vec6& ay = field.at(x, y + 1);
                for (int i = 0; i < 6; ++i) {
                    const double d = ay[i] - a[i];
                    e += w.lambda[i] * d * d;
                }
            }
        }
    }
    return e;
}

/// Which point the data term is linearized around. AroundIdentity is the
/// textbook update (gradients taken between the unwarped pair);
/// AroundCurrentField shifts the data term by the pixel's current parameters
/// so gradients may be refreshed from the currently-warped source between
/// sweeps while the field keeps its absolute meaning.
enum class DataLinearization { AroundIdentity, AroundCurrentField };

/// One coupled update at pixel v: solves
///   (sum_D Omega.Omega^T + Lambda) a = sum_D Omega.r + Lambda.a_p
/// over the window D centered at v, where a_p is the window mean of the
/// previous field. With all lambda zero this is exactly the windowed
/// closed-form solve (and shares its code path).
inline Vec6 local_update(const GradientTriple& grads, const LocalAffineField& field,
                         const SmoothnessWeights& w, int x, int y, int neighborhood,
                         DataLinearization lin = DataLinearization::AroundIdentity) {
    if (neighborhood < 3 || neighborhood % 2 == 0)
        raise(ErrorKind::InvalidParams, "local_update: neighborhood must be odd and >= 3");

    const int r = neighborhood / 2;
    const int w_img = grads.fx.width(), h_img = grads.fx.height();
    const PixelRect rect{std::max(0, x - r), std::max(0, y - r),
                         std::min(w_img, x + r + 1), std::min(h_img, y + r + 1)};

    if (w.all_zero() && lin == DataLinearization::AroundIdentity)
        return solve_affine(accumulate_normal_equations(grads, rect)).to_vec();

    const NormalEquations ne = accumulate_normal_equations(grads, rect);
    const Vec6 a_p = field.window_mean(x, y, neighborhood);

    bool zero_data = true;
    for (int i = 0; i < 6 && zero_data; ++i)
        for (int j = 0; j < 6; ++j)
            if (ne.M[i][j] != 0.0 || ne.b[i] != 0.0) {
                zero_data = false;
                break;
            }
    if (zero_data) {
        // no gradient information in the window: the update is the anchor
        bool positive = true;
        for (double l : w.lambda)
            if (l <= 0.0) positive = false;
        if (!positive)
            raise(ErrorKind::IllConditioned, "local_update: zero data and zero weights");
        return a_p;
    }

    Mat6 m = ne.M;
    Vec6 rhs = ne.b;
    if (lin == DataLinearization::AroundCurrentField) {
        const Vec6 identity = AffineParams::identity().to_vec();
        const Vec6& current = field.at(x, y);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) rhs[i] += ne.M[i][j] * (current[j] - identity[j]);
    }
    for (int i = 0; i < 6; ++i) {
        m[i][i] += w.lambda[i];
        rhs[i] += w.lambda[i] * a_p[i];
    }
    return detail::solve_spd6(m, rhs, "local_update");
}

/// One Jacobi sweep: applies local_update at every pixel, reading only the
/// previous field. Deterministic and order-independent.
inline LocalAffineField sweep(const GradientTriple& grads, const LocalAffineField& field,
                              const SmoothnessWeights& w, int neighborhood,
                              DataLinearization lin = DataLinearization::AroundIdentity) {
    if (field.width() != grads.fx.width() || field.height() != grads.fx.height())
        raise(ErrorKind::DimensionMismatch, "sweep: field/gradient shape mismatch");
    LocalAffineField out = field;
    for (int y = 0; y < field.height(); ++y)
        for (int x = 0; x < field.width(); ++x)
            out.at(x, y) = local_update(grads, field, w, x, y, neighborhood, lin);
    return out;
}

/// Displacements induced by the local maps: u(v) = A(v).v - v.
inline DeformationField params_to_field(const LocalAffineField& field) {
    DeformationField out(field.width(), field.height());
    for (int y = 0; y < field.height(); ++y) {
        for (int x = 0; x < field.width(); ++x) {
            const Vec6& a = field.at(x, y);
            out.ux(x, y) = a[0] * x + a[1] * y + a[2] - x;
            out.uy(x, y) = a[3] * x + a[4] * y + a[5] - y;
        }
    }
    return out;
}

struct ElasticRegistrationResult {
    DeformationField field;
    ImageGrid registered;
    RegistrationReport report;
};

/// Locally affine, globally smooth elastic registration. Runs the global
/// affine stage for pre-alignment, seeds the coarsest-level local field with
/// it, then per level runs coupled-update sweeps (gradients refreshed from
/// the currently-warped source before each sweep), converts the local maps
/// to displacements, and accumulates the level fields across the pyramid.
inline ElasticRegistrationResult register_elastic(const ImageGrid& source,
                                                  const ImageGrid& target,
                                                  const RegistrationConfig& cfg,
                                                  const StandardScaleConfig* std_cfg = nullptr) {
    const GlobalRegistrationResult pre = register_global(source, target, cfg, std_cfg);

    RegistrationReport report;
    ImageGrid S = source, T = target;
    int depth = 0;
    detail::RegPipeline pipe = detail::prepare_pipeline(S, T, cfg, std_cfg, report, depth);
    report.warps_performed += pre.report.warps_performed;
    report.restandardizations += pre.report.restandardizations;
    report.notes.push_back("global pre-alignment mse " + std::to_string(pre.report.final_mse));

    const GaussianPyramid pyr_s = pipe.pyramid(S, depth);
    const GaussianPyramid pyr_t = pipe.pyramid(T, depth);

    AffineParams coarse_init = pre.transform;
    for (int i = 1; i < depth; ++i) coarse_init = demote_affine(coarse_init);

    const SmoothnessWeights weights{cfg.lambda};
    DeformationField accumulated;
    ImageGrid warped;
    double cur_mse = 0.0;

    for (int level = 0; level < depth; ++level) {
        const ImageGrid& sk = pyr_s.levels[level];
        const ImageGrid& tk = pyr_t.levels[level];
        const ImageGrid tk_norm = detail::scaled_copy(tk, 1.0 / pipe.norm);

        LocalAffineField field = level == 0
                                     ? LocalAffineField(sk.width(), sk.height(),
                                                        coarse_init.to_vec())
                                     : LocalAffineField::identity(sk.width(), sk.height());
        if (level == 0)
            accumulated = DeformationField(sk.width(), sk.height());
        else
            accumulated = promote_field(accumulated, sk.width(), sk.height());

        DeformationField current = compose_fields(params_to_field(field), accumulated);
        warped = pipe.warp(sk, current, cfg.interp);
        cur_mse = pipe.level_mse(warped, tk);

        LevelReport lr;
        lr.level = level;
        lr.width = sk.width();
        lr.height = sk.height();
        lr.mse_before = cur_mse;

        for (int n = 0; n < cfg.elastic_sweeps; ++n) {
            const GradientTriple grads =
                gradient_triple(detail::scaled_copy(warped, 1.0 / pipe.norm), tk_norm);
            LocalAffineField next;
            try {
                next = sweep(grads, field, weights, cfg.neighborhood,
                             DataLinearization::AroundCurrentField);
            } catch (const Error& e) {
                raise(e.kind(), "register_elastic level " + std::to_string(level) +
                                    " sweep " + std::to_string(n) + ": " + e.what());
            }
            ++lr.iterations;
            lr.final_change = next.max_abs_diff(field);
            field = std::move(next);
            current = compose_fields(params_to_field(field), accumulated);
            warped = pipe.warp(sk, current, cfg.interp);
            if (lr.final_change < cfg.convergence_eps) break;
        }

        cur_mse = pipe.level_mse(warped, tk);
        lr.mse_after = cur_mse;
        report.per_level.push_back(lr);
        accumulated = std::move(current);
    }

    report.final_mse = cur_mse;
    return {std::move(accumulated), std::move(warped), std::move(report)};
}

} // namespace elreg
