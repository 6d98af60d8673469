#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "elreg/image.hpp"
#include "elreg/normal_equations.hpp"
#include "elreg/pyramid.hpp"
#include "elreg/standardize.hpp"
#include "elreg/warp.hpp"

namespace elreg {

struct RegistrationConfig {
    int depth = 4;                // pyramid levels
    int iters_per_level = 10;     // global affine iterations per level
    InterpMethod interp = InterpMethod::CubicSpline;
    Vec6 lambda = {1e2, 1e2, 1e2, 1e2, 1e2, 1e2}; // smoothness weights (elastic)
    int neighborhood = 5;         // local estimation window, odd (elastic)
    int elastic_sweeps = 20;      // update sweeps per level (elastic)
    bool standardize_each_warp = true;
    double convergence_eps = 1e-4; // stop when the incremental parameter change drops below

    void validate() const {
        if (depth < 1) raise(ErrorKind::InvalidParams, "config: depth must be >= 1");
        if (iters_per_level < 1) raise(ErrorKind::InvalidParams, "config: iters_per_level >= 1");
        if (neighborhood < 3 || neighborhood % 2 == 0)
            raise(ErrorKind::InvalidParams, "config: neighborhood must be odd and >= 3");
        if (elastic_sweeps < 1) raise(ErrorKind::InvalidParams, "config: elastic_sweeps >= 1");
        for (double l : lambda)
            if (l < 0) raise(ErrorKind::InvalidParams, "config: lambda entries must be >= 0");
    }
};

struct LevelReport {
    int level = 0; // 0 = coarsest
    int width = 0, height = 0;
    int iterations = 0;
    double final_change = 0.0; // max |increment - identity| at the last accepted step
    double mse_before = 0.0;
    double mse_after = 0.0;
};

struct RegistrationReport {
    std::vector<LevelReport> per_level;
    double unregistered_mse = 0.0;
    double final_mse = 0.0;
    std::optional<AffineParams> affine; // final transform in affine mode
    bool standard_scale = false;
    long warps_performed = 0;
    long restandardizations = 0;
    std::vector<std::string> notes;
};

struct GlobalRegistrationResult {
    AffineParams transform;
    ImageGrid registered;
    RegistrationReport report;
};

namespace detail {

inline ImageGrid scaled_copy(const ImageGrid& img, double factor) {
    std::vector<double> d(img.data());
    for (double& v : d) v *= factor;
    // working copies are tag-neutral so gradient code accepts any arm
    return ImageGrid(img.width(), img.height(), std::move(d), ScaleTag::ImageScale);
}

inline double joint_max(const ImageGrid& a, const ImageGrid& b) {
    const double m = std::max(a.min_max().second, b.min_max().second);
    return m > 0 ? m : 1.0;
}

// Shared state of one registration run: scale handling plus audit counters.
struct RegPipeline {
    const StandardScaleConfig* std_cfg = nullptr;
    bool restandardize = false;
    double norm = 1.0;
    RegistrationReport* report = nullptr;

    // Interpolation overshoot must not extend the intensity range: histogram
    // landmarks (p1 = minimum in particular) would otherwise jump on warped
    // images. Clamp to the pre-warp range before re-standardizing.
    ImageGrid after_warp(ImageGrid warped, const ImageGrid& pre_warp) const {
        ++report->warps_performed;
        if (restandardize) {
            const auto [lo, hi] = pre_warp.min_max();
            for (double& v : warped.data()) v = std::clamp(v, lo, hi);
            warped = standardize_auto(warped, *std_cfg);
            ++report->restandardizations;
        }
        return warped;
    }

    ImageGrid warp(const ImageGrid& level_src, const AffineParams& a,
                   InterpMethod m) const {
        return after_warp(warp_affine(level_src, a, m), level_src);
    }

    ImageGrid warp(const ImageGrid& level_src, const DeformationField& f,
                   InterpMethod m) const {
        return after_warp(warp_field(level_src, f, m), level_src);
    }

    // Downsampling is an interpolation too: when re-standardization is on,
    // every smoothed level is mapped back onto the standard scale so coarse
    // levels of both images share the full standard range.
    GaussianPyramid pyramid(const ImageGrid& img, int depth) const {
        GaussianPyramid pyr = build_pyramid(img, depth);
        if (restandardize) {
            for (int k = 0; k + 1 < depth; ++k) {
                pyr.levels[k].set_scale(ScaleTag::ImageScale);
                pyr.levels[k] = standardize_auto(pyr.levels[k], *std_cfg);
            }
        }
        return pyr;
    }

    double level_mse(const ImageGrid& a, const ImageGrid& b) const {
        return normalized_mse(a, b, norm);
    }
};

// Standardizes the inputs when a trained config is supplied and resolves the
// working pyramid depth (auto-reduced to keep the coarsest level >= 8x8).
inline RegPipeline prepare_pipeline(ImageGrid& source, ImageGrid& target,
                                    const RegistrationConfig& cfg,
                                    const StandardScaleConfig* std_cfg,
                                    RegistrationReport& report, int& depth) {
    if (!source.same_shape(target))
        raise(ErrorKind::DimensionMismatch, "register: source/target shape mismatch");
    cfg.validate();

    depth = cfg.depth;
    const int max_depth = max_pyramid_depth(source.width(), source.height());
    if (depth > max_depth) {
        depth = max_depth;
        report.notes.push_back("pyramid depth reduced from " + std::to_string(cfg.depth) +
                               " to " + std::to_string(depth) +
                               " to keep the coarsest level at least 8x8");
    }

    RegPipeline pipe;
    pipe.report = &report;
    if (std_cfg) {
        if (!std_cfg->trained())
            raise(ErrorKind::UntrainedConfig, "register: standardization config untrained");
        source = standardize_auto(source, *std_cfg);
        target = standardize_auto(target, *std_cfg);
        report.standard_scale = true;
        pipe.std_cfg = std_cfg;
        pipe.restandardize = cfg.standardize_each_warp;
        pipe.norm = std_cfg->s2;
    } else {
        pipe.norm = joint_max(source, target);
    }
    report.unregistered_mse = normalized_mse(source, target, pipe.norm);
    return pipe;
}

} // namespace detail

/// Global affine registration over the entire image, iterated coarse-to-fine.
/// Each iteration linearizes around the current warp, solves the 6x6 normal
/// equations for an incremental correction, and composes it into the running
/// transform; steps that increase the level MSE are rejected and end the
/// level. Returns the composed transform, the registered source at full
/// resolution, and per-level diagnostics.
inline GlobalRegistrationResult register_global(const ImageGrid& source,
                                                const ImageGrid& target,
                                                const RegistrationConfig& cfg,
                                                const StandardScaleConfig* std_cfg = nullptr) {
    RegistrationReport report;
    ImageGrid S = source, T = target;
    int depth = 0;
    detail::RegPipeline pipe = detail::prepare_pipeline(S, T, cfg, std_cfg, report, depth);

    const GaussianPyramid pyr_s = pipe.pyramid(S, depth);
    const GaussianPyramid pyr_t = pipe.pyramid(T, depth);

    AffineParams transform;
    ImageGrid warped;
    double cur_mse = 0.0;

    for (int level = 0; level < depth; ++level) {
        const ImageGrid& sk = pyr_s.levels[level];
        const ImageGrid& tk = pyr_t.levels[level];
        const ImageGrid tk_norm = detail::scaled_copy(tk, 1.0 / pipe.norm);

        if (level > 0) transform = promote_affine(transform);
        warped = pipe.warp(sk, transform, cfg.interp);
        cur_mse = pipe.level_mse(warped, tk);

        LevelReport lr;
        lr.level = level;
        lr.width = sk.width();
        lr.height = sk.height();
        lr.mse_before = cur_mse;

        for (int it = 0; it < cfg.iters_per_level; ++it) {
            const GradientTriple grads =
                gradient_triple(detail::scaled_copy(warped, 1.0 / pipe.norm), tk_norm);

            AffineParams increment;
            try {
                increment =
                    solve_affine(accumulate_normal_equations(grads, PixelRect::full(warped)));
            } catch (const Error& e) {
                raise(e.kind(), "register_global level " + std::to_string(level) +
                                    " iteration " + std::to_string(it) + ": " + e.what());
            }
            ++lr.iterations;
            lr.final_change = increment.max_abs_diff(AffineParams::identity());

            const AffineParams candidate = transform.compose(increment);
            ImageGrid candidate_warp = pipe.warp(sk, candidate, cfg.interp);
            const double candidate_mse = pipe.level_mse(candidate_warp, tk);
            if (candidate_mse > cur_mse) break; // reject the step, end the level

            transform = candidate;
            warped = std::move(candidate_warp);
            cur_mse = candidate_mse;
            if (lr.final_change < cfg.convergence_eps) break;
        }

        lr.mse_after = cur_mse;
        report.per_level.push_back(lr);
    }

    report.final_mse = cur_mse;
    report.affine = transform;
    return {transform, std::move(warped), std::move(report)};
}

} // namespace elreg
