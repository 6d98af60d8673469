#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

#include "elreg/image_io.hpp"
#include "elreg/synth.hpp"

#include "testutil.hpp"

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output; // stdout + stderr
};

RunResult run_cli(const std::string& args, const std::string& log_path) {
    const std::string cmd =
        std::string(ELREG_CLI_PATH) + " " + args + " > " + log_path + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log_path);
    std::stringstream ss;
    ss << in.rdbuf();
    r.output = ss.str();
    return r;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json load_json(const std::string& path) {
    return nlohmann::json::parse(slurp(path));
}

} // namespace

TEST_CASE("cli end-to-end") {
    testutil::TempDir tmp("cli");
    const std::string log = tmp.file("log.txt");

    // deterministic inputs for the whole scenario
    elreg::write_pgm(tmp.file("a.pgm"), elreg::make_phantom(96, 96, 1), 255);
    elreg::write_pgm(tmp.file("b.pgm"), elreg::make_phantom(96, 96, 2), 255);

    SECTION("std-train is deterministic; failures name the image") {
        RunResult r = run_cli("std-train " + tmp.file("a.pgm") + " " + tmp.file("b.pgm") +
                                  " --out " + tmp.file("p.txt"),
                              log);
        REQUIRE(r.exit_code == 0);
        CHECK(r.output.find("config: command=std-train") != std::string::npos);
        CHECK(r.output.find("mu_s=") != std::string::npos);
        const std::string first = slurp(tmp.file("p.txt"));
        CHECK(!first.empty());

        r = run_cli("std-train " + tmp.file("a.pgm") + " " + tmp.file("b.pgm") + " --out " +
                        tmp.file("p2.txt"),
                    log);
        REQUIRE(r.exit_code == 0);
        CHECK(slurp(tmp.file("p2.txt")) == first); // byte-identical rerun

        r = run_cli("std-train " + tmp.file("missing.pgm") + " --out " + tmp.file("p3.txt"),
                    log);
        CHECK(r.exit_code == 2);
        CHECK(r.output.find("missing.pgm") != std::string::npos);
    }

    SECTION("std-apply writes a bounded standard-scale image") {
        REQUIRE(run_cli("std-train " + tmp.file("a.pgm") + " --out " + tmp.file("p.txt"), log)
                    .exit_code == 0);
        const RunResult r = run_cli("std-apply " + tmp.file("a.pgm") + " --std " +
                                        tmp.file("p.txt") + " --out " + tmp.file("s.pgm"),
                                    log);
        REQUIRE(r.exit_code == 0);
        const elreg::ImageGrid img = elreg::read_pgm(tmp.file("s.pgm"));
        const auto [lo, hi] = img.min_max();
        CHECK(lo >= 1.0);
        CHECK(hi <= 4095.0);
        CHECK(hi > 255.0); // 16-bit payload
    }

    SECTION("register self-affine reports near-zero error") {
        const RunResult r = run_cli("register --source " + tmp.file("a.pgm") + " --target " +
                                        tmp.file("a.pgm") + " --mode affine --out-dir " +
                                        tmp.file("reg"),
                                    log);
        REQUIRE(r.exit_code == 0);
        CHECK(r.output.find("config: command=register") != std::string::npos);
        const auto report = load_json(tmp.file("reg") + "/report.json");
        CHECK(report["final_mse"].get<double>() < 1e-10);
        CHECK(report.contains("transform"));
        CHECK(load_json(tmp.file("reg") + "/report.json")["levels"].size() == 4);
    }

    SECTION("register elastic with --std audits re-standardization per warp") {
        REQUIRE(run_cli("std-train " + tmp.file("a.pgm") + " " + tmp.file("b.pgm") +
                            " --out " + tmp.file("p.txt"),
                        log)
                    .exit_code == 0);
        const RunResult r = run_cli(
            "register --source " + tmp.file("a.pgm") + " --target " + tmp.file("b.pgm") +
                " --mode elastic --sweeps 3 --iters 3 --std " + tmp.file("p.txt") +
                " --out-dir " + tmp.file("rege"),
            log);
        REQUIRE(r.exit_code == 0);
        const auto report = load_json(tmp.file("rege") + "/report.json");
        CHECK(report["scale"] == "standard");
        CHECK(report["warps_performed"].get<long>() ==
              report["restandardizations"].get<long>());
        CHECK(std::ifstream(tmp.file("rege") + "/field.eldf").good());

        const RunResult r2 = run_cli(
            "register --source " + tmp.file("a.pgm") + " --target " + tmp.file("b.pgm") +
                " --mode elastic --sweeps 3 --iters 3 --no-restandardize --std " +
                tmp.file("p.txt") + " --out-dir " + tmp.file("regn"),
            log);
        REQUIRE(r2.exit_code == 0);
        const auto report2 = load_json(tmp.file("regn") + "/report.json");
        CHECK(report2["restandardizations"].get<long>() == 0);
    }

    SECTION("register with a missing std file exits 2 with a message") {
        const RunResult r = run_cli("register --source " + tmp.file("a.pgm") + " --target " +
                                        tmp.file("b.pgm") + " --std " + tmp.file("nope.txt") +
                                        " --out-dir " + tmp.file("regx"),
                                    log);
        CHECK(r.exit_code == 2);
        CHECK(r.output.find("nope.txt") != std::string::npos);
    }

    SECTION("synth is seed-deterministic") {
        REQUIRE(run_cli("synth " + tmp.file("a.pgm") + " --kind nonlinear --rms 8 --seed 7" +
                            " --out-dir " + tmp.file("s1"),
                        log)
                    .exit_code == 0);
        REQUIRE(run_cli("synth " + tmp.file("a.pgm") + " --kind nonlinear --rms 8 --seed 7" +
                            " --out-dir " + tmp.file("s2"),
                        log)
                    .exit_code == 0);
        CHECK(slurp(tmp.file("s1") + "/warped.elrg") == slurp(tmp.file("s2") + "/warped.elrg"));
        CHECK(slurp(tmp.file("s1") + "/truth.eldf") == slurp(tmp.file("s2") + "/truth.eldf"));
        CHECK(slurp(tmp.file("s1") + "/warped.elrg") != "");
    }

    SECTION("eval handles manifests, including missing files, and is repeatable") {
        REQUIRE(run_cli("synth " + tmp.file("a.pgm") + " --kind affine --rms 4 --seed 3" +
                            " --out-dir " + tmp.file("sa"),
                        log)
                    .exit_code == 0);
        std::ofstream manifest(tmp.file("m.txt"));
        manifest << "# three pairs, one broken\n";
        manifest << tmp.file("a.pgm") << " " << tmp.file("sa") << "/warped.elrg "
                 << tmp.file("sa") << "/truth.txt\n";
        manifest << tmp.file("a.pgm") << " " << tmp.file("a.pgm") << "\n";
        manifest << tmp.file("a.pgm") << " " << tmp.file("gone.pgm") << "\n";
        manifest.close();

        const RunResult r = run_cli("eval --manifest " + tmp.file("m.txt") +
                                        " --mode affine --iters 5 --out " + tmp.file("rep.json"),
                                    log);
        REQUIRE(r.exit_code == 0); // broken pair is a warning, not a failure
        CHECK(r.output.find("warning") != std::string::npos);
        const auto rep = load_json(tmp.file("rep.json"));
        CHECK(rep["n"].get<int>() == 3);
        REQUIRE(rep["pairs"].size() == 3);
        CHECK(rep["pairs"][0].contains("disp_rms"));
        CHECK(rep["pairs"][2].contains("error"));

        REQUIRE(run_cli("eval --manifest " + tmp.file("m.txt") +
                            " --mode affine --iters 5 --jobs 3 --out " + tmp.file("rep2.json"),
                        log)
                    .exit_code == 0);
        CHECK(load_json(tmp.file("rep2.json"))["mse_mean"] == rep["mse_mean"]);
    }

    SECTION("checkerboard and pyramid-dump") {
        REQUIRE(run_cli("checkerboard " + tmp.file("a.pgm") + " " + tmp.file("b.pgm") +
                            " --square 12 --out " + tmp.file("cb.pgm"),
                        log)
                    .exit_code == 0);
        const elreg::ImageGrid cb = elreg::read_pgm(tmp.file("cb.pgm"));
        CHECK(cb.width() == 96);

        const RunResult r = run_cli(
            "pyramid-dump " + tmp.file("a.pgm") + " --levels 3 --out-dir " + tmp.file("pyr"),
            log);
        REQUIRE(r.exit_code == 0);
        CHECK(elreg::read_pgm(tmp.file("pyr") + "/level_0.pgm").width() == 24);
        CHECK(elreg::read_pgm(tmp.file("pyr") + "/level_2.pgm").width() == 96);
    }

    SECTION("repeated register runs are bit-identical") {
        REQUIRE(run_cli("synth " + tmp.file("a.pgm") + " --kind affine --rms 5 --seed 11" +
                            " --out-dir " + tmp.file("sd"),
                        log)
                    .exit_code == 0);
        const std::string common = "register --source " + tmp.file("a.pgm") + " --target " +
                                   tmp.file("sd") + "/warped.elrg --mode affine --out-dir ";
        REQUIRE(run_cli(common + tmp.file("d1"), log).exit_code == 0);
        REQUIRE(run_cli(common + tmp.file("d2"), log).exit_code == 0);
        CHECK(slurp(tmp.file("d1") + "/registered.elrg") ==
              slurp(tmp.file("d2") + "/registered.elrg"));
        CHECK(slurp(tmp.file("d1") + "/transform.txt") ==
              slurp(tmp.file("d2") + "/transform.txt"));
        CHECK(slurp(tmp.file("d1") + "/report.json") == slurp(tmp.file("d2") + "/report.json"));
    }

    SECTION("usage errors exit 64") {
        CHECK(run_cli("register --bogus", log).exit_code == 64);
        CHECK(run_cli("", log).exit_code == 64);
        CHECK(run_cli("synth " + tmp.file("a.pgm") + " --kind sideways", log).exit_code == 64);
    }
}
