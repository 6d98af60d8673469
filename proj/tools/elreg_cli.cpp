// Command-line front end: intensity standardization, affine/elastic
// registration, synthetic deformation generation, batch evaluation, and
// checkerboard composites, wired for reproducible runs.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "elreg/elreg.hpp"

namespace {

// Exit codes: 0 success, 2 I/O, 3 standardization, 4 registration, 64 usage.
constexpr int kExitOk = 0;
constexpr int kExitIo = 2;
constexpr int kExitStd = 3;
constexpr int kExitReg = 4;
constexpr int kExitUsage = 64;

struct CliError {
    int code;
    std::string message;
};

elreg::ImageGrid load_image(const std::string& path) {
    try {
        return elreg::read_image(path);
    } catch (const std::exception& e) {
        throw CliError{kExitIo, "cannot read image '" + path + "': " + e.what()};
    }
}

elreg::StandardScaleConfig load_std_params(const std::string& path) {
    try {
        return elreg::read_std_params(path);
    } catch (const std::exception& e) {
        throw CliError{kExitIo,
                       "cannot read standardization parameters '" + path + "': " + e.what()};
    }
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw CliError{kExitIo, "cannot create output directory '" + dir + "'"};
}

// Shared registration flags, defaults equal to the library defaults.
struct RegFlags {
    elreg::RegistrationConfig cfg;
    std::string interp = "cubic";
    std::vector<double> lambda;
    std::string std_params;
    bool no_restandardize = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--levels", cfg.depth, "pyramid depth")->capture_default_str();
        cmd->add_option("--iters", cfg.iters_per_level, "affine iterations per level")
            ->capture_default_str();
        cmd->add_option("--sweeps", cfg.elastic_sweeps, "elastic update sweeps per level")
            ->capture_default_str();
        cmd->add_option("--lambda", lambda,
                        "smoothness weights (one value or six comma-separated)")
            ->delimiter(',');
        cmd->add_option("--neighborhood", cfg.neighborhood,
                        "local estimation window (odd)")
            ->capture_default_str();
        cmd->add_option("--interp", interp, "interpolation")
            ->check(CLI::IsMember({"bilinear", "cubic"}))
            ->capture_default_str();
        cmd->add_option("--std", std_params,
                        "trained standardization parameter file (enables the standard-scale arm)");
        cmd->add_flag("--no-restandardize", no_restandardize,
                      "skip re-standardization after each warp");
        cmd->add_option("--eps", cfg.convergence_eps, "parameter-change convergence threshold")
            ->capture_default_str();
    }

    void resolve() {
        cfg.interp = interp == "bilinear" ? elreg::InterpMethod::Bilinear
                                          : elreg::InterpMethod::CubicSpline;
        cfg.standardize_each_warp = !no_restandardize;
        if (lambda.size() == 1) {
            cfg.lambda = elreg::SmoothnessWeights::uniform(lambda[0]).lambda;
        } else if (lambda.size() == 6) {
            for (int i = 0; i < 6; ++i) cfg.lambda[i] = lambda[i];
        } else if (!lambda.empty()) {
            throw CliError{kExitUsage, "--lambda takes one or six comma-separated values"};
        }
    }

    std::string echo() const {
        std::ostringstream out;
        out << "levels=" << cfg.depth << " iters=" << cfg.iters_per_level
            << " sweeps=" << cfg.elastic_sweeps << " neighborhood=" << cfg.neighborhood
            << " interp=" << interp << " lambda=";
        for (int i = 0; i < 6; ++i) out << (i ? "," : "") << cfg.lambda[i];
        out << " eps=" << cfg.convergence_eps
            << " restandardize=" << (cfg.standardize_each_warp ? 1 : 0)
            << " std=" << (std_params.empty() ? "(none)" : std_params);
        return out.str();
    }

    std::optional<elreg::StandardScaleConfig> load() const {
        if (std_params.empty()) return std::nullopt;
        return load_std_params(std_params);
    }
};

void echo_config(const std::string& command, const std::string& detail) {
    std::cout << "config: command=" << command << " " << detail << "\n";
}

void write_report_json(const std::string& path, const nlohmann::ordered_json& j) {
    std::ofstream out(path);
    if (!out) throw CliError{kExitIo, "cannot write report '" + path + "'"};
    out << j.dump(2) << "\n";
}

int pgm_maxval_for(const elreg::ImageGrid& img, const elreg::StandardScaleConfig* std_cfg) {
    if (img.scale() == elreg::ScaleTag::StandardScale)
        return std_cfg ? static_cast<int>(std_cfg->s2) : 4095;
    return 255;
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

int run_std_train(const std::vector<std::string>& images, const std::string& out,
                  elreg::StandardScaleConfig base, int nbins) {
    std::ostringstream detail;
    detail << "out=" << out << " nbins=" << nbins << " pc1=" << base.pc1
           << " pc2=" << base.pc2 << " s1=" << base.s1 << " s2=" << base.s2 << " images=";
    for (size_t i = 0; i < images.size(); ++i) detail << (i ? "," : "") << images[i];
    echo_config("std-train", detail.str());

    std::vector<elreg::ImageGrid> set;
    for (const std::string& path : images) set.push_back(load_image(path));
    elreg::StandardScaleConfig trained;
    try {
        trained = elreg::train(set, base, nbins);
    } catch (const elreg::Error& e) {
        throw CliError{kExitStd, std::string("training failed: ") + e.what()};
    }
    try {
        elreg::write_std_params(out, trained);
    } catch (const std::exception& e) {
        throw CliError{kExitIo, e.what()};
    }
    std::cout << "mu_s=" << *trained.mu_s << "\n";
    return kExitOk;
}

int run_std_apply(const std::string& image, const std::string& params,
                  const std::string& out) {
    echo_config("std-apply", "image=" + image + " std=" + params + " out=" + out);
    const elreg::StandardScaleConfig cfg = load_std_params(params);
    const elreg::ImageGrid img = load_image(image);
    elreg::ImageGrid std_img;
    try {
        std_img = elreg::standardize_auto(img, cfg);
    } catch (const elreg::Error& e) {
        throw CliError{kExitStd, std::string("standardization failed: ") + e.what()};
    }
    try {
        elreg::write_image(out, std_img, static_cast<int>(cfg.s2));
    } catch (const std::exception& e) {
        throw CliError{kExitIo, e.what()};
    }
    std::cout << "standardized " << image << " -> " << out << "\n";
    return kExitOk;
}

int run_register(const std::string& source_path, const std::string& target_path,
                 const std::string& mode, RegFlags& flags, const std::string& out_dir) {
    flags.resolve();
    echo_config("register", "mode=" + mode + " source=" + source_path +
                                " target=" + target_path + " out-dir=" + out_dir + " " +
                                flags.echo());

    const elreg::ImageGrid source = load_image(source_path);
    const elreg::ImageGrid target = load_image(target_path);
    const std::optional<elreg::StandardScaleConfig> std_cfg = flags.load();
    ensure_out_dir(out_dir);
    const std::filesystem::path dir(out_dir);

    elreg::RegistrationReport report;
    elreg::ImageGrid registered;
    try {
        if (mode == "affine") {
            elreg::GlobalRegistrationResult res = elreg::register_global(
                source, target, flags.cfg, std_cfg ? &*std_cfg : nullptr);
            report = std::move(res.report);
            registered = std::move(res.registered);
            elreg::write_affine_text((dir / "transform.txt").string(), res.transform);
        } else {
            elreg::ElasticRegistrationResult res = elreg::register_elastic(
                source, target, flags.cfg, std_cfg ? &*std_cfg : nullptr);
            report = std::move(res.report);
            registered = std::move(res.registered);
            elreg::write_eldf((dir / "field.eldf").string(), res.field);
        }
    } catch (const elreg::Error& e) {
        throw CliError{kExitReg, std::string("registration failed: ") + e.what()};
    }

    try {
        elreg::write_elrg((dir / "registered.elrg").string(), registered);
        elreg::write_pgm((dir / "registered.pgm").string(), registered,
                         pgm_maxval_for(registered, std_cfg ? &*std_cfg : nullptr));
        write_report_json((dir / "report.json").string(),
                          elreg::registration_report_json(report));
    } catch (const std::exception& e) {
        throw CliError{kExitIo, e.what()};
    }

    for (const std::string& note : report.notes) std::cerr << "note: " << note << "\n";
    std::cout << "final_mse=" << report.final_mse
              << " unregistered_mse=" << report.unregistered_mse
              << " warps=" << report.warps_performed
              << " restandardizations=" << report.restandardizations << "\n";
    return kExitOk;
}

int run_synth(const std::string& image_path, const std::string& kind, double rms,
              uint64_t seed, const std::string& out_dir, const std::string& interp) {
    echo_config("synth", "image=" + image_path + " kind=" + kind +
                             " rms=" + std::to_string(rms) + " seed=" + std::to_string(seed) +
                             " out-dir=" + out_dir + " interp=" + interp);
    const elreg::ImageGrid img = load_image(image_path);
    ensure_out_dir(out_dir);
    const std::filesystem::path dir(out_dir);
    const elreg::InterpMethod method = interp == "bilinear" ? elreg::InterpMethod::Bilinear
                                                            : elreg::InterpMethod::CubicSpline;

    try {
        elreg::ImageGrid warped;
        if (kind == "affine") {
            const elreg::AffineParams truth =
                elreg::random_affine_warp(img.width(), img.height(), rms, seed);
            warped = elreg::warp_affine(img, truth, method);
            elreg::write_affine_text((dir / "truth.txt").string(), truth);
        } else {
            const elreg::DeformationField truth =
                elreg::random_nonlinear_warp(img.width(), img.height(), rms, seed);
            warped = elreg::warp_field(img, truth, method);
            elreg::write_eldf((dir / "truth.eldf").string(), truth);
        }
        elreg::write_elrg((dir / "warped.elrg").string(), warped);
        elreg::write_pgm((dir / "warped.pgm").string(), warped, 255);
    } catch (const elreg::Error& e) {
        throw CliError{kExitIo, std::string("synthesis failed: ") + e.what()};
    }
    std::cout << "wrote " << (dir / "warped.elrg").string() << "\n";
    return kExitOk;
}

struct ManifestEntry {
    std::string id;
    std::string source, target, truth;
};

std::vector<ManifestEntry> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CliError{kExitIo, "cannot open manifest '" + path + "'"};
    std::vector<ManifestEntry> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        ManifestEntry e;
        if (!(ls >> e.source)) continue;       // blank line
        if (e.source[0] == '#') continue;      // comment
        if (!(ls >> e.target))
            throw CliError{kExitUsage,
                           "manifest line " + std::to_string(lineno) + ": need source target"};
        ls >> e.truth; // optional
        e.id = "pair" + std::to_string(entries.size());
        entries.push_back(std::move(e));
    }
    return entries;
}

int run_eval(const std::string& manifest_path, const std::string& mode, RegFlags& flags,
             const std::string& out, int jobs) {
    flags.resolve();
    echo_config("eval", "manifest=" + manifest_path + " mode=" + mode + " out=" + out +
                            " jobs=" + std::to_string(jobs) + " " + flags.echo());

    const std::vector<ManifestEntry> entries = read_manifest(manifest_path);
    if (entries.empty()) throw CliError{kExitUsage, "manifest has no pairs"};
    const std::optional<elreg::StandardScaleConfig> std_cfg = flags.load();

    std::vector<elreg::BatchPair> loadable;
    std::vector<elreg::PairResult> failed;
    for (const ManifestEntry& e : entries) {
        try {
            elreg::BatchPair pair;
            pair.id = e.id;
            pair.source = elreg::read_image(e.source);
            pair.target = elreg::read_image(e.target);
            if (!e.truth.empty()) {
                if (elreg::has_suffix(e.truth, ".eldf")) {
                    pair.truth = elreg::read_eldf(e.truth);
                } else {
                    pair.truth = elreg::field_from_affine(
                        elreg::read_affine_text(e.truth), pair.source.width(),
                        pair.source.height());
                }
            }
            loadable.push_back(std::move(pair));
        } catch (const std::exception& ex) {
            std::cerr << "warning: pair " << e.id << " failed to load: " << ex.what() << "\n";
            elreg::PairResult r;
            r.id = e.id;
            r.ok = false;
            r.error = ex.what();
            failed.push_back(std::move(r));
        }
    }

    elreg::BatchReport report;
    if (!loadable.empty()) {
        report = elreg::batch_evaluate(loadable,
                                       mode == "affine" ? elreg::RegistrationMode::GlobalAffine
                                                        : elreg::RegistrationMode::Elastic,
                                       flags.cfg, std_cfg ? &*std_cfg : nullptr, jobs);
    }
    for (elreg::PairResult& r : failed) report.per_pair.push_back(std::move(r));
    std::sort(report.per_pair.begin(), report.per_pair.end(),
              [](const elreg::PairResult& a, const elreg::PairResult& b) { return a.id < b.id; });
    report.n = static_cast<int>(report.per_pair.size());

    write_report_json(out, elreg::batch_report_json(report));
    std::cout << elreg::batch_report_table(report,
                                           std_cfg ? "On Standard Scale" : "On Image Scale");
    return kExitOk;
}

int run_checkerboard(const std::string& a_path, const std::string& b_path, int square,
                     const std::string& out) {
    const elreg::ImageGrid a = load_image(a_path);
    const elreg::ImageGrid b = load_image(b_path);
    const int sq = square > 0 ? square : elreg::default_checker_square(a.width());
    echo_config("checkerboard",
                "a=" + a_path + " b=" + b_path + " square=" + std::to_string(sq) +
                    " out=" + out);
    try {
        const elreg::ImageGrid composite = elreg::checkerboard(a, b, sq);
        const double hi = composite.min_max().second;
        elreg::write_image(out, composite, hi > 255.5 ? 65535 : 255);
    } catch (const elreg::Error& e) {
        throw CliError{kExitIo, std::string("checkerboard failed: ") + e.what()};
    }
    return kExitOk;
}

int run_pyramid_dump(const std::string& image_path, int levels, const std::string& out_dir) {
    echo_config("pyramid-dump", "image=" + image_path + " levels=" + std::to_string(levels) +
                                    " out-dir=" + out_dir);
    const elreg::ImageGrid img = load_image(image_path);
    ensure_out_dir(out_dir);
    try {
        const elreg::GaussianPyramid pyr = elreg::build_pyramid(img, levels);
        for (int k = 0; k < pyr.depth; ++k) {
            const std::filesystem::path p =
                std::filesystem::path(out_dir) / ("level_" + std::to_string(k) + ".pgm");
            elreg::write_pgm(p.string(), pyr.levels[k], 255);
            std::cout << p.string() << " " << pyr.levels[k].width() << "x"
                      << pyr.levels[k].height() << "\n";
        }
    } catch (const elreg::Error& e) {
        throw CliError{kExitUsage, std::string("pyramid-dump failed: ") + e.what()};
    }
    return kExitOk;
}

int run_phantom(int width, int height, uint64_t seed, const std::string& kind,
                const std::string& out) {
    echo_config("phantom", "width=" + std::to_string(width) + " height=" +
                               std::to_string(height) + " seed=" + std::to_string(seed) +
                               " kind=" + kind + " out=" + out);
    const elreg::ImageGrid img = kind == "texture" ? elreg::make_texture(width, height, seed)
                                                   : elreg::make_phantom(width, height, seed);
    try {
        elreg::write_image(out, img, 255);
    } catch (const std::exception& e) {
        throw CliError{kExitIo, e.what()};
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"elreg: elastic medical image registration on a standard intensity scale"};
    app.require_subcommand(1);

    // std-train
    auto* train_cmd = app.add_subcommand("std-train", "learn standard-scale parameters");
    std::vector<std::string> train_images;
    std::string train_out = "std_params.txt";
    elreg::StandardScaleConfig train_base;
    int train_nbins = 256;
    train_cmd->add_option("images", train_images, "training images")->required();
    train_cmd->add_option("--out", train_out, "output parameter file")->capture_default_str();
    train_cmd->add_option("--nbins", train_nbins, "histogram bins")->capture_default_str();
    train_cmd->add_option("--pc1", train_base.pc1, "lower percentile")->capture_default_str();
    train_cmd->add_option("--pc2", train_base.pc2, "upper percentile")->capture_default_str();
    train_cmd->add_option("--s1", train_base.s1, "standard scale minimum")->capture_default_str();
    train_cmd->add_option("--s2", train_base.s2, "standard scale maximum")->capture_default_str();

    // std-apply
    auto* apply_cmd = app.add_subcommand("std-apply", "standardize one image");
    std::string apply_image, apply_params, apply_out = "standardized.pgm";
    apply_cmd->add_option("image", apply_image, "input image")->required();
    apply_cmd->add_option("--std", apply_params, "trained parameter file")->required();
    apply_cmd->add_option("--out", apply_out, "output image")->capture_default_str();

    // register
    auto* reg_cmd = app.add_subcommand("register", "register a source onto a target");
    std::string reg_source, reg_target, reg_mode = "affine", reg_out_dir = "reg_out";
    RegFlags reg_flags;
    reg_cmd->add_option("--source", reg_source, "moving image")->required();
    reg_cmd->add_option("--target", reg_target, "fixed image")->required();
    reg_cmd->add_option("--mode", reg_mode, "affine|elastic")
        ->check(CLI::IsMember({"affine", "elastic"}))
        ->capture_default_str();
    reg_cmd->add_option("--out-dir", reg_out_dir, "output directory")->capture_default_str();
    reg_flags.attach(reg_cmd);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "apply a random deformation to an image");
    std::string synth_image, synth_kind = "affine", synth_out_dir = "synth_out",
                synth_interp = "cubic";
    double synth_rms = 12.0;
    uint64_t synth_seed = 1;
    synth_cmd->add_option("image", synth_image, "input image")->required();
    synth_cmd->add_option("--kind", synth_kind, "affine|nonlinear")
        ->check(CLI::IsMember({"affine", "nonlinear"}))
        ->capture_default_str();
    synth_cmd->add_option("--rms", synth_rms, "r.m.s. displacement in pixels")
        ->capture_default_str();
    synth_cmd->add_option("--seed", synth_seed, "random seed")->capture_default_str();
    synth_cmd->add_option("--out-dir", synth_out_dir, "output directory")->capture_default_str();
    synth_cmd->add_option("--interp", synth_interp, "interpolation")
        ->check(CLI::IsMember({"bilinear", "cubic"}))
        ->capture_default_str();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "batch-register pairs from a manifest");
    std::string eval_manifest, eval_mode = "affine", eval_out = "report.json";
    int eval_jobs = 1;
    RegFlags eval_flags;
    eval_cmd->add_option("--manifest", eval_manifest,
                         "text file: one 'source target [truth]' per line")
        ->required();
    eval_cmd->add_option("--mode", eval_mode, "affine|elastic")
        ->check(CLI::IsMember({"affine", "elastic"}))
        ->capture_default_str();
    eval_cmd->add_option("--out", eval_out, "JSON report path")->capture_default_str();
    eval_cmd->add_option("--jobs", eval_jobs, "parallel workers across pairs")
        ->capture_default_str();
    eval_flags.attach(eval_cmd);

    // checkerboard
    auto* checker_cmd = app.add_subcommand("checkerboard", "alternating-square composite");
    std::string checker_a, checker_b, checker_out = "checkerboard.pgm";
    int checker_square = 0;
    checker_cmd->add_option("a", checker_a, "first image")->required();
    checker_cmd->add_option("b", checker_b, "second image")->required();
    checker_cmd->add_option("--square", checker_square,
                            "square size in pixels (default width/8)");
    checker_cmd->add_option("--out", checker_out, "output image")->capture_default_str();

    // pyramid-dump
    auto* pyr_cmd = app.add_subcommand("pyramid-dump", "write pyramid levels as PGM");
    std::string pyr_image, pyr_out_dir = "pyramid_out";
    int pyr_levels = 4;
    pyr_cmd->add_option("image", pyr_image, "input image")->required();
    pyr_cmd->add_option("--levels", pyr_levels, "pyramid depth")->capture_default_str();
    pyr_cmd->add_option("--out-dir", pyr_out_dir, "output directory")->capture_default_str();

    // phantom
    auto* phantom_cmd = app.add_subcommand("phantom", "generate a deterministic test image");
    std::string phantom_kind = "phantom", phantom_out = "phantom.pgm";
    int phantom_w = 256, phantom_h = 256;
    uint64_t phantom_seed = 1;
    phantom_cmd->add_option("--width", phantom_w, "width")->capture_default_str();
    phantom_cmd->add_option("--height", phantom_h, "height")->capture_default_str();
    phantom_cmd->add_option("--seed", phantom_seed, "random seed")->capture_default_str();
    phantom_cmd->add_option("--kind", phantom_kind, "phantom|texture")
        ->check(CLI::IsMember({"phantom", "texture"}))
        ->capture_default_str();
    phantom_cmd->add_option("--out", phantom_out, "output image")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*train_cmd) return run_std_train(train_images, train_out, train_base, train_nbins);
        if (*apply_cmd) return run_std_apply(apply_image, apply_params, apply_out);
        if (*reg_cmd)
            return run_register(reg_source, reg_target, reg_mode, reg_flags, reg_out_dir);
        if (*synth_cmd)
            return run_synth(synth_image, synth_kind, synth_rms, synth_seed, synth_out_dir,
                             synth_interp);
        if (*eval_cmd) return run_eval(eval_manifest, eval_mode, eval_flags, eval_out, eval_jobs);
        if (*checker_cmd)
            return run_checkerboard(checker_a, checker_b, checker_square, checker_out);
        if (*pyr_cmd) return run_pyramid_dump(pyr_image, pyr_levels, pyr_out_dir);
        if (*phantom_cmd)
            return run_phantom(phantom_w, phantom_h, phantom_seed, phantom_kind, phantom_out);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitUsage;
}
