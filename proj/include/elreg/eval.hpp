#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "elreg/field.hpp"
#include "elreg/image.hpp"
#include "elreg/register_global.hpp"
#include "elreg/register_local.hpp"

namespace elreg {

/// Alternating-square composite of two registered images for visual
/// assessment: square parity (floor(x/s) + floor(y/s)) even takes a,
/// odd takes b.
inline ImageGrid checkerboard(const ImageGrid& a, const ImageGrid& b, int square) {
    if (!a.same_shape(b))
        raise(ErrorKind::DimensionMismatch, "checkerboard: shape mismatch");
    if (square < 1) raise(ErrorKind::InvalidParams, "checkerboard: square must be >= 1");

    std::vector<double> out(a.pixel_count());
    for (int y = 0; y < a.height(); ++y) {
        for (int x = 0; x < a.width(); ++x) {
            const bool from_a = ((x / square + y / square) % 2) == 0;
            out[static_cast<size_t>(y) * a.width() + x] = from_a ? a.at(x, y) : b.at(x, y);
        }
    }
    return ImageGrid(a.width(), a.height(), std::move(out), a.scale());
}

inline int default_checker_square(int width) { return std::max(1, (width + 4) / 8); }

enum class RegistrationMode { GlobalAffine, Elastic };

inline const char* to_string(RegistrationMode m) {
    return m == RegistrationMode::GlobalAffine ? "affine" : "elastic";
}

struct BatchPair {
    std::string id;
    ImageGrid source;
    ImageGrid target;
    std::optional<DeformationField> truth;
};

struct PairResult {
    std::string id;
    bool ok = false;
    double mse = 0.0;
    std::optional<double> disp_rms;
    std::string error;
};

struct BatchReport {
    int n = 0;
    double mse_mean = 0.0;
    double mse_max = 0.0;
    double mse_min = 0.0;
    std::vector<PairResult> per_pair;
};

/// Registers every pair and aggregates MSE statistics (plus displacement
/// error against ground truth when supplied). Per-pair failures are recorded
/// in the report, not fatal to the batch. Pairs are independent; jobs > 1
/// distributes them over threads with deterministic output ordering.
inline BatchReport batch_evaluate(const std::vector<BatchPair>& pairs, RegistrationMode mode,
                                  const RegistrationConfig& cfg,
                                  const StandardScaleConfig* std_cfg = nullptr, int jobs = 1) {
    if (pairs.empty()) raise(ErrorKind::InvalidParams, "batch_evaluate: empty batch");

    std::vector<PairResult> results(pairs.size());
    auto run_one = [&](size_t i) {
        PairResult r;
        r.id = pairs[i].id;
        try {
            if (mode == RegistrationMode::GlobalAffine) {
                const GlobalRegistrationResult res =
                    register_global(pairs[i].source, pairs[i].target, cfg, std_cfg);
                r.mse = res.report.final_mse;
                if (pairs[i].truth)
                    r.disp_rms = displacement_error(
                        field_from_affine(res.transform, pairs[i].source.width(),
                                          pairs[i].source.height()),
                        *pairs[i].truth);
            } else {
                const ElasticRegistrationResult res =
                    register_elastic(pairs[i].source, pairs[i].target, cfg, std_cfg);
                r.mse = res.report.final_mse;
                if (pairs[i].truth) r.disp_rms = displacement_error(res.field, *pairs[i].truth);
            }
            r.ok = true;
        } catch (const std::exception& e) {
            r.ok = false;
            r.error = e.what();
        }
        results[i] = std::move(r);
    };

    const int workers = std::max(1, jobs);
    if (workers == 1) {
        for (size_t i = 0; i < pairs.size(); ++i) run_one(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<size_t> next{0};
        for (int t = 0; t < workers; ++t)
            pool.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < pairs.size(); i = next.fetch_add(1))
                    run_one(i);
            });
        for (std::thread& t : pool) t.join();
    }

    BatchReport report;
    report.per_pair = std::move(results);
    report.n = static_cast<int>(report.per_pair.size());
    bool any = false;
    double sum = 0.0;
    int ok_count = 0;
    for (const PairResult& r : report.per_pair) {
        if (!r.ok) continue;
        if (!any) {
            report.mse_max = report.mse_min = r.mse;
            any = true;
        } else {
            report.mse_max = std::max(report.mse_max, r.mse);
            report.mse_min = std::min(report.mse_min, r.mse);
        }
        sum += r.mse;
        ++ok_count;
    }
    report.mse_mean = ok_count > 0 ? sum / ok_count : 0.0;
    return report;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json batch_report_json(const BatchReport& r) {
    nlohmann::ordered_json j;
    j["n"] = r.n;
    j["mse_mean"] = r.mse_mean;
    j["mse_max"] = r.mse_max;
    j["mse_min"] = r.mse_min;
    j["pairs"] = nlohmann::ordered_json::array();
    for (const PairResult& p : r.per_pair) {
        nlohmann::ordered_json jp;
        jp["id"] = p.id;
        if (p.ok) {
            jp["mse"] = p.mse;
            if (p.disp_rms) jp["disp_rms"] = *p.disp_rms;
        } else {
            jp["error"] = p.error;
        }
        j["pairs"].push_back(jp);
    }
    return j;
}

/// Aligned text table mirroring the batch statistics layout.
inline std::string batch_report_table(const BatchReport& r, const std::string& label) {
    std::ostringstream out;
    out.precision(4);
    out << std::fixed;
    out << "Scale/Error          MSE      Max MSE  Min MSE  (n=" << r.n << ")\n";
    out << label;
    for (size_t i = label.size(); i < 21; ++i) out << ' ';
    out << r.mse_mean << "   " << r.mse_max << "   " << r.mse_min << "\n";
    return out.str();
}

inline nlohmann::ordered_json registration_report_json(const RegistrationReport& r) {
    nlohmann::ordered_json j;
    j["scale"] = r.standard_scale ? "standard" : "image";
    j["unregistered_mse"] = r.unregistered_mse;
    j["final_mse"] = r.final_mse;
    j["warps_performed"] = r.warps_performed;
    j["restandardizations"] = r.restandardizations;
    if (r.affine) {
        const Vec6 v = r.affine->to_vec();
        j["transform"] = v;
    }
    j["levels"] = nlohmann::ordered_json::array();
    for (const LevelReport& l : r.per_level) {
        nlohmann::ordered_json jl;
        jl["level"] = l.level;
        jl["width"] = l.width;
        jl["height"] = l.height;
        jl["iterations"] = l.iterations;
        jl["final_change"] = l.final_change;
        jl["mse_before"] = l.mse_before;
        jl["mse_after"] = l.mse_after;
        j["levels"].push_back(jl);
    }
    if (!r.notes.empty()) j["notes"] = r.notes;
    return j;
}

} // namespace elreg
