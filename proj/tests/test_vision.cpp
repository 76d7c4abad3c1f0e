#include <doctest.h>

#include <cmath>
#include <random>

#include "cavforge/beam.hpp"
#include "cavforge/frame.hpp"
#include "cavforge/vision.hpp"
#include "support.hpp"

using namespace cavforge;
using namespace cavforge::test;

namespace {

CameraFrame spot(double cx, double cy, double sigma_px, double amp = 0.8) {
    CameraFrame f(640, 480, 0.01);
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x)
            f.at(x, y) += amp * std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2.0 * sigma_px * sigma_px));
    return f;
}

CameraFrame hg_frame(int n, double waist_mm) {
    Component cam = camera("cam");
    CameraHit hit{"cam", 0.0, 0.0, waist_mm, 0.05, n, Wavelength::Laser};
    return render_frame(std::span(&hit, 1), cam);
}

}  // namespace

TEST_SUITE("vision") {

TEST_CASE("log transform") {
    CameraFrame f(3, 1, 0.01);
    f.intensities = {0.0, 1.0, 0.1};
    CameraFrame g = vision::log_transform(f);
    CHECK(g.intensities[0] == 0.0);
    CHECK(g.intensities[1] == 1.0);
    CHECK(std::abs(g.intensities[2] - std::log(2.0) / std::log(11.0)) < 1e-12);
    CHECK(g.intensities[2] == doctest::Approx(0.28906).epsilon(1e-4));
    CHECK_THROWS_AS(vision::log_transform(f, 0.0), Error);
}

TEST_CASE("log transform is monotone") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    CameraFrame f(1000, 1, 0.01);
    for (double& v : f.intensities) v = u(rng);
    std::sort(f.intensities.begin(), f.intensities.end());
    CameraFrame g = vision::log_transform(f);
    for (std::size_t i = 1; i < g.intensities.size(); ++i) CHECK(g.intensities[i] >= g.intensities[i - 1]);
}

TEST_CASE("reference subtraction") {
    CameraFrame live = spot(320, 240, 10);
    CHECK(vision::subtract_reference(live, live).peak() == 0.0);
    CHECK(vision::subtract_reference(live, CameraFrame(640, 480, 0.01)) == live);
    CHECK_THROWS_AS(vision::subtract_reference(live, CameraFrame(10, 10, 0.01)), Error);
}

TEST_CASE("subtraction isolates the secondary spot") {
    Component cam = camera("cam");
    CameraHit primary{"cam", 0.0, 0.0, 0.3, 0.02, 0, Wavelength::Pump};
    CameraHit secondary{"cam", 0.7, -0.4, 0.3, 0.01, 0, Wavelength::Pump};
    CameraHit both[] = {primary, secondary};
    CameraFrame live = render_frame(both, cam);
    CameraFrame ref = render_frame(std::span(&primary, 1), cam);
    auto c = vision::centroid(vision::subtract_reference(live, ref));
    REQUIRE(c);
    auto expect = vision::mm_to_pixel_point(0.7, -0.4, cam.params.camera);
    CHECK(std::abs(c->px - expect.px) < 1.0);
    CHECK(std::abs(c->py - expect.py) < 1.0);
}

TEST_CASE("centroid") {
    CameraFrame one(640, 480, 0.01);
    one.at(100, 50) = 1.0;
    auto c = vision::centroid(one);
    REQUIRE(c);
    CHECK(c->px == 100.0);
    CHECK(c->py == 50.0);

    c = vision::centroid(spot(320.0, 240.0, 12.0));
    REQUIRE(c);
    CHECK(c->px == doctest::Approx(320.0).epsilon(0.1 / 320.0));
    CHECK(c->py == doctest::Approx(240.0).epsilon(0.1 / 240.0));

    CameraFrame two(640, 480, 0.01);
    two.at(100, 240) = 1.0;
    two.at(300, 240) = 1.0;
    c = vision::centroid(two);
    REQUIRE(c);
    CHECK(c->px == 200.0);
    CHECK(c->py == 240.0);

    CHECK_FALSE(vision::centroid(CameraFrame(640, 480, 0.01)).has_value());
    CameraFrame faint(640, 480, 0.01);
    faint.at(10, 10) = 0.5;
    CHECK_FALSE(vision::centroid(faint).has_value());
}

TEST_CASE("M squared of Hermite-Gaussian modes") {
    const double w = 0.25;
    const double ref_sigma_px = w / 2.0 / 0.01;
    for (int n = 0; n <= 3; ++n) {
        auto st = vision::beam_stats(hg_frame(n, w), ref_sigma_px);
        REQUIRE(st.detected);
        CAPTURE(n);
        CHECK(st.m_squared == doctest::Approx(2.0 * n + 1.0).epsilon(n == 0 ? 0.05 : 0.1));
    }
}

TEST_CASE("dark frame yields no stats") {
    auto st = vision::beam_stats(CameraFrame(640, 480, 0.01), 10.0);
    CHECK_FALSE(st.detected);
}

TEST_CASE("pixel and millimetre conversion") {
    CameraSpec spec;
    auto off = vision::pixel_point_to_mm({spec.width / 2.0, spec.height / 2.0}, spec);
    CHECK(off.u_mm == 0.0);
    CHECK(off.v_mm == 0.0);
    CHECK(vision::pixels_to_mm(100.0, 0.01) == doctest::Approx(1.0).epsilon(1e-15));
    for (double mm : {-3.7, 0.0, 0.123456789, 2.5}) {
        CHECK(std::abs(vision::pixels_to_mm(vision::mm_to_pixels(mm, 0.01), 0.01) - mm) < 1e-12);
    }
    auto p = vision::mm_to_pixel_point(0.5, -0.25, spec);
    auto back = vision::pixel_point_to_mm(p, spec);
    CHECK(std::abs(back.u_mm - 0.5) < 1e-12);
    CHECK(std::abs(back.v_mm + 0.25) < 1e-12);
}

TEST_CASE("PGM round trip") {
    CameraFrame f = spot(40, 30, 5);
    std::string bytes = to_pgm_bytes(f);
    CHECK(bytes.rfind("P5", 0) == 0);
    auto path = std::filesystem::temp_directory_path() / "cavforge_pgm_roundtrip.pgm";
    write_pgm(f, path);
    CameraFrame g = read_pgm(path);
    std::filesystem::remove(path);
    REQUIRE(g.same_shape(f));
    for (std::size_t i = 0; i < f.intensities.size(); ++i) {
        CHECK(std::abs(g.intensities[i] - f.intensities[i]) <= 0.5 / 255.0 + 1e-12);
    }
}

}
