#include <catch2/catch_amalgamated.hpp>

#include "elreg/field.hpp"
#include "elreg/image.hpp"
#include "elreg/image_io.hpp"
#include "elreg/interpolate.hpp"
#include "elreg/synth.hpp"
#include "elreg/warp.hpp"

#include "testutil.hpp"

using namespace elreg;
using testutil::image_of;
using testutil::ramp_x;

TEST_CASE("spatial_gradients") {
    SECTION("constant image has zero gradients") {
        const auto [fx, fy] = spatial_gradients(ImageGrid::filled(7, 5, 3.25));
        for (double v : fx.data()) CHECK(v == 0.0);
        for (double v : fy.data()) CHECK(v == 0.0);
    }

    SECTION("x ramp") {
        const auto [fx, fy] = spatial_gradients(ramp_x(9, 6));
        for (int y = 0; y < 6; ++y)
            for (int x = 0; x < 9; ++x) {
                CHECK(fx.at(x, y) == 1.0); // one-sided borders are exact on a ramp too
                CHECK(fy.at(x, y) == 0.0);
            }
    }

    SECTION("product surface I = x*y at interior pixel (2,3)") {
        const ImageGrid img = image_of(5, 5, [](int x, int y) { return double(x) * y; });
        const auto [fx, fy] = spatial_gradients(img);
        CHECK(fx.at(2, 3) == Catch::Approx(3.0).margin(1e-12));
        CHECK(fy.at(2, 3) == Catch::Approx(2.0).margin(1e-12));
    }

    SECTION("affine intensity surface recovered exactly at interior pixels") {
        const ImageGrid img =
            image_of(8, 8, [](int x, int y) { return 1.75 * x - 0.5 * y + 3.0; });
        const auto [fx, fy] = spatial_gradients(img);
        for (int y = 1; y < 7; ++y)
            for (int x = 1; x < 7; ++x) {
                CHECK(fx.at(x, y) == Catch::Approx(1.75).margin(1e-12));
                CHECK(fy.at(x, y) == Catch::Approx(-0.5).margin(1e-12));
            }
    }

    SECTION("rejects images thinner than 3 pixels") {
        CHECK_THROWS_MATCHES(spatial_gradients(ImageGrid::filled(2, 5, 0.0)), Error,
                             Catch::Matchers::Predicate<Error>([](const Error& e) {
                                 return e.kind() == ErrorKind::DimensionTooSmall;
                             }));
    }
}

TEST_CASE("temporal_gradient") {
    SECTION("identical images give zero") {
        const ImageGrid img = testutil::image_of(6, 4, [](int x, int y) { return x + 2.0 * y; });
        const ImageGrid ft = temporal_gradient(img, img);
        for (double v : ft.data()) CHECK(v == 0.0);
    }

    SECTION("constant difference, source minus target") {
        const ImageGrid ft =
            temporal_gradient(ImageGrid::filled(4, 4, 5.0), ImageGrid::filled(4, 4, 3.0));
        for (double v : ft.data()) CHECK(v == 2.0);
    }

    SECTION("dimension and scale mismatches") {
        CHECK_THROWS_AS(temporal_gradient(ImageGrid::filled(4, 4, 0.0),
                                          ImageGrid::filled(4, 5, 0.0)),
                        Error);
        ImageGrid std_img = ImageGrid::filled(4, 4, 10.0, ScaleTag::StandardScale);
        CHECK_THROWS_MATCHES(temporal_gradient(ImageGrid::filled(4, 4, 0.0), std_img), Error,
                             Catch::Matchers::Predicate<Error>([](const Error& e) {
                                 return e.kind() == ErrorKind::ScaleMismatch;
                             }));
    }
}

TEST_CASE("interpolation") {
    const ImageGrid img = make_texture(32, 24, 99);

    SECTION("integer coordinates reproduce samples under both methods") {
        for (InterpMethod m : {InterpMethod::Bilinear, InterpMethod::CubicSpline}) {
            const Interpolator interp(img, m);
            for (int y = 0; y < img.height(); y += 3)
                for (int x = 0; x < img.width(); x += 5)
                    CHECK(interp(double(x), double(y)) == img.at(x, y));
        }
    }

    SECTION("bilinear is exact on a linear ramp at half-pixel offsets") {
        const ImageGrid ramp = ramp_x(16, 4);
        const Interpolator interp(ramp, InterpMethod::Bilinear);
        for (int x = 0; x < 15; ++x)
            CHECK(interp(x + 0.5, 1.0) == Catch::Approx(x + 0.5).margin(1e-12));
    }

    SECTION("cubic spline reproduces a quadratic in the interior") {
        const ImageGrid quad = image_of(64, 5, [](int x, int) { return double(x) * x; });
        const Interpolator interp(quad, InterpMethod::CubicSpline);
        for (int x = 16; x < 32; ++x) {
            const double q = x + 0.5;
            CHECK(interp(q, 2.0) == Catch::Approx(q * q).margin(1e-9));
        }
    }

    SECTION("out-of-bounds coordinates clamp to the edge") {
        const Interpolator bi(img, InterpMethod::Bilinear);
        const Interpolator cu(img, InterpMethod::CubicSpline);
        CHECK(bi(-7.3, 5.0) == img.at(0, 5));
        CHECK(bi(100.0, 5.0) == img.at(31, 5));
        CHECK(cu(5.0, -2.5) == img.at(5, 0));
        CHECK(cu(5.0, 500.0) == img.at(5, 23));
    }
}

TEST_CASE("warp_affine") {
    const ImageGrid img = make_texture(48, 48, 7);

    SECTION("identity warp is bit-exact under both methods") {
        for (InterpMethod m : {InterpMethod::Bilinear, InterpMethod::CubicSpline}) {
            const ImageGrid out = warp_affine(img, AffineParams::identity(), m);
            REQUIRE(out.pixel_count() == img.pixel_count());
            for (size_t i = 0; i < out.pixel_count(); ++i)
                CHECK(out.data()[i] == img.data()[i]);
            CHECK(out.scale() == ScaleTag::ImageScale);
        }
    }

    SECTION("unit translation on a ramp adds one in the interior") {
        const ImageGrid ramp = ramp_x(16, 8);
        const ImageGrid out =
            warp_affine(ramp, AffineParams::translation(1.0, 0.0), InterpMethod::Bilinear);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 14; ++x)
                CHECK(out.at(x, y) == Catch::Approx(ramp.at(x, y) + 1.0).margin(1e-12));
    }

    SECTION("two quarter turns equal a half turn") {
        const double c = (48 - 1) / 2.0;
        const AffineParams r90 = testutil::rotation_about(90.0, c, c);
        const AffineParams r180 = testutil::rotation_about(180.0, c, c);
        const ImageGrid twice =
            warp_affine(warp_affine(img, r90, InterpMethod::CubicSpline), r90,
                        InterpMethod::CubicSpline);
        const ImageGrid once = warp_affine(img, r180, InterpMethod::CubicSpline);
        CHECK(testutil::max_diff_interior(twice, once, 4) < 1e-3 * 255.0);
    }

    SECTION("two 30-degree turns equal a 60-degree turn on smooth data") {
        const ImageGrid norm = image_of(48, 48, [](int x, int y) {
            return 0.5 + 0.4 * std::sin(0.3 * x) * std::cos(0.25 * y);
        });
        const double c = (48 - 1) / 2.0;
        const AffineParams r30 = testutil::rotation_about(30.0, c, c);
        const AffineParams r60 = testutil::rotation_about(60.0, c, c);
        const ImageGrid twice =
            warp_affine(warp_affine(norm, r30, InterpMethod::CubicSpline), r30,
                        InterpMethod::CubicSpline);
        const ImageGrid once = warp_affine(norm, r60, InterpMethod::CubicSpline);
        CHECK(testutil::max_diff_interior(twice, once, 14) < 1e-3);
    }

    SECTION("singular transform is rejected") {
        AffineParams squash{0.0, 0.0, 1.0, 0.0, 0.0, 1.0};
        CHECK_THROWS_MATCHES(warp_affine(img, squash, InterpMethod::Bilinear), Error,
                             Catch::Matchers::Predicate<Error>([](const Error& e) {
                                 return e.kind() == ErrorKind::SingularTransform;
                             }));
    }
}

TEST_CASE("warp_field") {
    const ImageGrid img = make_texture(40, 32, 21);

    SECTION("zero field is the identity") {
        const ImageGrid out = warp_field(img, DeformationField(40, 32), InterpMethod::CubicSpline);
        for (size_t i = 0; i < out.pixel_count(); ++i) CHECK(out.data()[i] == img.data()[i]);
    }

    SECTION("constant field matches pure translation") {
        DeformationField f(40, 32);
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 40; ++x) f.ux(x, y) = 2.0;
        const ImageGrid via_field = warp_field(img, f, InterpMethod::CubicSpline);
        const ImageGrid via_affine =
            warp_affine(img, AffineParams::translation(2.0, 0.0), InterpMethod::CubicSpline);
        for (size_t i = 0; i < via_field.pixel_count(); ++i)
            CHECK(via_field.data()[i] == Catch::Approx(via_affine.data()[i]).margin(1e-9));
    }

    SECTION("field induced by an affine matches the affine warp") {
        const AffineParams a{1.02, -0.03, 1.5, 0.01, 0.98, -0.7};
        const ImageGrid via_field =
            warp_field(img, field_from_affine(a, 40, 32), InterpMethod::Bilinear);
        const ImageGrid via_affine = warp_affine(img, a, InterpMethod::Bilinear);
        for (size_t i = 0; i < via_field.pixel_count(); ++i)
            CHECK(via_field.data()[i] == Catch::Approx(via_affine.data()[i]).margin(1e-9));
    }

    SECTION("field shape must match the image") {
        CHECK_THROWS_AS(warp_field(img, DeformationField(10, 10), InterpMethod::Bilinear),
                        Error);
    }
}

TEST_CASE("mse") {
    SECTION("zero iff equal, constant case") {
        const ImageGrid a = make_texture(16, 16, 3);
        CHECK(mse(a, a) == 0.0);
        CHECK(mse(ImageGrid::filled(8, 8, 1.0), ImageGrid::filled(8, 8, 0.5)) ==
              Catch::Approx(0.25).margin(1e-15));
    }

    SECTION("symmetry and positivity") {
        const ImageGrid a = make_texture(16, 16, 3);
        const ImageGrid b = make_texture(16, 16, 4);
        CHECK(mse(a, b) == Catch::Approx(mse(b, a)));
        CHECK(mse(a, b) > 0.0);
        CHECK_THROWS_AS(mse(a, ImageGrid::filled(4, 4, 0.0)), Error);
    }
}

TEST_CASE("image file round-trips") {
    testutil::TempDir tmp("io");

    SECTION("8-bit PGM") {
        const ImageGrid img =
            image_of(13, 9, [](int x, int y) { return double((x * 7 + y * 31) % 256); });
        write_pgm(tmp.file("a.pgm"), img, 255);
        const ImageGrid back = read_pgm(tmp.file("a.pgm"));
        REQUIRE(back.same_shape(img));
        for (size_t i = 0; i < img.pixel_count(); ++i) CHECK(back.data()[i] == img.data()[i]);
    }

    SECTION("16-bit PGM is big-endian") {
        const ImageGrid img = image_of(3, 2, [](int x, int y) { return 256.0 * x + y + 4000; });
        write_pgm(tmp.file("b.pgm"), img, 65535);
        const ImageGrid back = read_pgm(tmp.file("b.pgm"));
        for (size_t i = 0; i < img.pixel_count(); ++i) CHECK(back.data()[i] == img.data()[i]);

        std::ifstream in(tmp.file("b.pgm"), std::ios::binary);
        std::string header;
        std::getline(in, header); // P5
        std::getline(in, header); // dims
        std::getline(in, header); // maxval
        unsigned char b0 = in.get(), b1 = in.get();
        CHECK(int(b0) * 256 + int(b1) == 4000); // most significant byte first
    }

    SECTION("PGM header errors") {
        std::ofstream(tmp.file("bad.pgm")) << "P2\n2 2\n255\n0 0 0 0\n";
        CHECK_THROWS_AS(read_pgm(tmp.file("bad.pgm")), Error);
        CHECK_THROWS_AS(read_pgm(tmp.file("missing.pgm")), Error);
    }

    SECTION("raw container is lossless") {
        const ImageGrid img = make_texture(17, 11, 5);
        write_elrg(tmp.file("a.elrg"), img);
        const ImageGrid back = read_elrg(tmp.file("a.elrg"));
        REQUIRE(back.same_shape(img));
        for (size_t i = 0; i < img.pixel_count(); ++i) CHECK(back.data()[i] == img.data()[i]);
    }

    SECTION("field container is lossless") {
        DeformationField f = random_nonlinear_warp(9, 7, 3.0, 11);
        write_eldf(tmp.file("f.eldf"), f);
        const DeformationField back = read_eldf(tmp.file("f.eldf"));
        REQUIRE(back.same_shape(f));
        for (size_t i = 0; i < f.data().size(); ++i) CHECK(back.data()[i] == f.data()[i]);
    }

    SECTION("affine text file") {
        const AffineParams a{1.25, -0.125, 3.0078125, 0.5, 0.75, -2.5};
        write_affine_text(tmp.file("t.txt"), a);
        const AffineParams back = read_affine_text(tmp.file("t.txt"));
        CHECK(back.max_abs_diff(a) == 0.0);
    }
}
