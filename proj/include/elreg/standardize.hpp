#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "elreg/image.hpp"

namespace elreg {

/// Uniform-bin intensity histogram spanning [min, max] of the source image.
struct Histogram {
    std::vector<double> bin_edges; // nbins + 1 edges
    std::vector<long> counts;      // nbins counts, summing to the pixel count

    int nbins() const { return static_cast<int>(counts.size()); }
    double bin_center(int i) const { return 0.5 * (bin_edges[i] + bin_edges[i + 1]); }
};

/// Per-image histogram landmarks: extrema m1/m2, percentile cut points
/// p1/p2, and the foreground mode mu. Invariant: m1 <= p1 < mu < p2 <= m2.
struct HistogramLandmarks {
    double m1 = 0.0;
    double m2 = 0.0;
    double mu = 0.0;
    double p1 = 0.0;
    double p2 = 0.0;
};

/// Standard-scale parameters. pc1/pc2 select the intensity range of
/// interest, [s1, s2] is the target range, and mu_s is the trained standard
/// foreground mode (absent until train() runs).
struct StandardScaleConfig {
    double pc1 = 0.0;
    double pc2 = 99.8;
    double s1 = 1.0;
    double s2 = 4095.0;
    int nbins = 256;
    std::optional<double> mu_s;

    bool trained() const { return mu_s.has_value(); }
};

inline Histogram compute_histogram(const ImageGrid& img, int nbins) {
    if (nbins < 2) raise(ErrorKind::InvalidParams, "compute_histogram: nbins must be >= 2");
    const auto [lo, hi] = img.min_max();
    if (lo == hi) raise(ErrorKind::ConstantImage, "compute_histogram: constant image");

    Histogram h;
    h.bin_edges.resize(nbins + 1);
    h.counts.assign(nbins, 0);
    const double width = (hi - lo) / nbins;
    for (int i = 0; i <= nbins; ++i) h.bin_edges[i] = lo + width * i;
    h.bin_edges[nbins] = hi;

    for (double v : img.data()) {
        int b = static_cast<int>((v - lo) / width);
        b = std::clamp(b, 0, nbins - 1); // max value falls into the last bin
        ++h.counts[b];
    }
    return h;
}

/// Percentile of the intensity distribution with linear interpolation
/// between order statistics; pc = 0 gives the minimum, pc = 100 the maximum.
inline double percentile(const ImageGrid& img, double pc) {
    std::vector<double> sorted(img.data());
    std::sort(sorted.begin(), sorted.end());
    const double rank = std::clamp(pc, 0.0, 100.0) / 100.0 *
                        static_cast<double>(sorted.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(rank));
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double t = rank - static_cast<double>(lo);
    return (1.0 - t) * sorted[lo] + t * sorted[hi];
}

/// Extracts m1/m2, the pc1/pc2 percentiles, and the foreground mode. The
/// mode search discards bins whose left edge lies at or below p1 (the
/// background lobe) and keeps only bins centered strictly below p2; ties
/// break toward higher intensity.
inline HistogramLandmarks detect_landmarks(const ImageGrid& img,
                                           const StandardScaleConfig& cfg, int nbins) {
    const Histogram h = compute_histogram(img, nbins); // raises ConstantImage

    HistogramLandmarks lm;
    const auto [lo, hi] = img.min_max();
    lm.m1 = lo;
    lm.m2 = hi;
    lm.p1 = percentile(img, cfg.pc1);
    lm.p2 = percentile(img, cfg.pc2);

    long best = -1;
    for (int i = 0; i < h.nbins(); ++i) {
        if (h.bin_edges[i] <= lm.p1) continue;
        const double c = h.bin_center(i);
        if (c >= lm.p2) continue;
        if (h.counts[i] >= best) { // >=: ties toward higher intensity
            best = h.counts[i];
            lm.mu = c;
        }
    }
    if (best < 0)
        raise(ErrorKind::DegenerateHistogram,
              "detect_landmarks: no foreground mode strictly between p1 and p2");
    if (!(lm.m1 <= lm.p1 && lm.p1 < lm.mu && lm.mu < lm.p2 && lm.p2 <= lm.m2))
        raise(ErrorKind::DegenerateHistogram, "detect_landmarks: landmark ordering violated");
    return lm;
}

/// Linear map of x in [p1, p2] onto [s1, s2].
inline double map_to_standard(double x, double p1, double p2,
                              const StandardScaleConfig& cfg) {
    if (!(p1 < p2)) raise(ErrorKind::DegenerateRange, "map_to_standard: p1 >= p2");
    return cfg.s1 + (x - p1) / (p2 - p1) * (cfg.s2 - cfg.s1);
}

/// Training step: maps each image's foreground mode onto the standard scale
/// and stores the rounded mean as mu_s. Images that fail landmark detection
/// abort the training run.
inline StandardScaleConfig train(const std::vector<ImageGrid>& images,
                                 const StandardScaleConfig& cfg, int nbins) {
    if (images.empty()) raise(ErrorKind::EmptyTrainingSet, "train: no images");
    double sum = 0.0;
    for (const ImageGrid& img : images) {
        const HistogramLandmarks lm = detect_landmarks(img, cfg, nbins);
        sum += map_to_standard(lm.mu, lm.p1, lm.p2, cfg);
    }
    StandardScaleConfig out = cfg;
    out.nbins = nbins;
    out.mu_s = static_cast<double>(std::llround(sum / static_cast<double>(images.size())));
    if (!(cfg.s1 < *out.mu_s && *out.mu_s < cfg.s2))
        raise(ErrorKind::InvalidLandmarks, "train: mu_s fell outside (s1, s2)");
    return out;
}

/// The scalar two-piece mapping: linear through (p1, s1)-(mu, mu_s) below
/// the mode and (mu, mu_s)-(p2, s2) above it, rounded to the nearest integer
/// and clamped to [s1, s2].
inline double standardize_value(double x, const HistogramLandmarks& lm,
                                const StandardScaleConfig& cfg) {
    const double mu_s = *cfg.mu_s;
    double y;
    if (x <= lm.mu)
        y = mu_s + (x - lm.mu) * (cfg.s1 - mu_s) / (lm.p1 - lm.mu);
    else
        y = mu_s + (x - lm.mu) * (cfg.s2 - mu_s) / (lm.p2 - lm.mu);
    y = static_cast<double>(std::llround(y)); // nearest integer, half away from zero
    return std::clamp(y, cfg.s1, cfg.s2);
}

/// Transformation step: piecewise-linear remap of every pixel onto the
/// standard scale. Requires a trained config and an image-scale input.
inline ImageGrid standardize(const ImageGrid& img, const HistogramLandmarks& lm,
                             const StandardScaleConfig& cfg) {
    if (!cfg.trained()) raise(ErrorKind::UntrainedConfig, "standardize: mu_s not trained");
    if (img.scale() != ScaleTag::ImageScale)
        raise(ErrorKind::ScaleMismatch, "standardize: input already on standard scale");
    if (!(lm.m1 <= lm.p1 && lm.p1 < lm.mu && lm.mu < lm.p2 && lm.p2 <= lm.m2))
        raise(ErrorKind::InvalidLandmarks, "standardize: landmark ordering violated");

    std::vector<double> out(img.pixel_count());
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = standardize_value(img.data()[i], lm, cfg);
    return ImageGrid(img.width(), img.height(), std::move(out), ScaleTag::StandardScale);
}

/// Detect-then-transform convenience used after each warp/interpolation.
inline ImageGrid standardize_auto(const ImageGrid& img, const StandardScaleConfig& cfg) {
    return standardize(img, detect_landmarks(img, cfg, cfg.nbins), cfg);
}

/// Plain-text parameter file: pc1, pc2, s1, s2, mu_s, nbins as key=value
/// lines, in that order.
inline void write_std_params(const std::string& path, const StandardScaleConfig& cfg) {
    if (!cfg.trained()) raise(ErrorKind::UntrainedConfig, "write_std_params: untrained");
    std::ofstream out(path);
    if (!out) raise(ErrorKind::IoError, "cannot write " + path);
    out.precision(17);
    out << "pc1=" << cfg.pc1 << "\n"
        << "pc2=" << cfg.pc2 << "\n"
        << "s1=" << cfg.s1 << "\n"
        << "s2=" << cfg.s2 << "\n"
        << "mu_s=" << *cfg.mu_s << "\n"
        << "nbins=" << cfg.nbins << "\n";
    if (!out) raise(ErrorKind::IoError, "short write to " + path);
}

inline StandardScaleConfig read_std_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::IoError, "cannot open " + path);
    StandardScaleConfig cfg;
    std::string line;
    bool have_mu = false;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq);
        const double val = std::stod(line.substr(eq + 1));
        if (key == "pc1") cfg.pc1 = val;
        else if (key == "pc2") cfg.pc2 = val;
        else if (key == "s1") cfg.s1 = val;
        else if (key == "s2") cfg.s2 = val;
        else if (key == "mu_s") { cfg.mu_s = val; have_mu = true; }
        else if (key == "nbins") cfg.nbins = static_cast<int>(val);
    }
    if (!have_mu) raise(ErrorKind::IoError, path + ": missing mu_s");
    return cfg;
}

} // namespace elreg
