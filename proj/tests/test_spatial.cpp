#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "cavforge/beam.hpp"
#include "cavforge/spatial.hpp"
#include "support.hpp"

using namespace cavforge;
using namespace cavforge::test;

namespace {

struct AffinePlant final : SpatialPlant {
    double gain, offset, pos = 0.0;
    AffinePlant(double g, double b) : gain(g), offset(b) {}
    double commanded() const override { return pos; }
    void move_to(double p) override { pos = p; }
    std::optional<double> measure() override { return gain * pos + offset; }
};

struct DarkPlant final : SpatialPlant {
    double pos = 0.0;
    double commanded() const override { return pos; }
    void move_to(double p) override { pos = p; }
    std::optional<double> measure() override { return std::nullopt; }
};

}  // namespace

TEST_SUITE("spatial") {

TEST_CASE("newton correction") {
    CHECK(newton_correction(2.0, 0.5, 1.0) == -1.5);
    CHECK(newton_correction(2.0, 0.5, -2.0) == 0.0);
    CHECK_THROWS_AS(newton_correction(1.0, 0.5, 0.0), Error);
    CHECK_THROWS_AS(newton_correction(1.0, 0.0, 1.0), Error);
}

TEST_CASE("affine response converges in one correction") {
    for (auto [g, b] : {std::pair{0.1, -5.0}, {1.7, 3.0}, {-0.5, 2.0}, {10.0, 0.7}}) {
        AffinePlant plant(g, b);
        OptTrace t = spatial_search(plant, {}, 0.3);
        CHECK(t.converged);
        CHECK(t.iters_used == 1);
        CHECK(std::abs(g * plant.pos + b) < 1e-9);
        REQUIRE(t.iterations.size() == 3);
        CHECK(t.iterations[0].action == "measure");
        CHECK(t.iterations[1].action == "probe");
        CHECK(t.iterations[2].action == "correct");
    }
}

TEST_CASE("already on target needs no move") {
    AffinePlant plant(1.0, 0.01);
    OptTrace t = spatial_search(plant, {}, 0.3);
    CHECK(t.converged);
    CHECK(t.iters_used == 0);
    CHECK(t.iterations.size() == 1);
}

TEST_CASE("lost beam and flat response are reported") {
    DarkPlant dark;
    CHECK_THROWS_AS(spatial_search(dark, {}, 0.3), OptimizationError);
    AffinePlant flat(0.0, 1.0);
    try {
        spatial_search(flat, {}, 0.3);
        FAIL("expected a degenerate response");
    } catch (const OptimizationError& e) {
        CHECK(e.code() == ErrorCode::DegenerateResponse);
        CHECK(e.trace().iterations.size() == 2);
    }
}

TEST_CASE("best-so-far is a running minimum") {
    OptTrace t;
    for (double v : {3.0, 1.0, 2.0, 0.5}) t.iterations.push_back({{}, {}, v, "x"});
    CHECK(t.best_so_far() == std::vector<double>{3.0, 1.0, 1.0, 0.5});
}

TEST_CASE("workspace spatial optimization moves the component onto target") {
    Workspace ws = put(bench(), camera("cam1"), 700.0);
    Component oc = part("oc", Kind::MirrorOC);
    oc.params.focal_mm = 540.0;
    ws = put(std::move(ws), oc, 430.0, 3.0);
    CameraSpec spec;
    SpatialResult r = spatial_optimize(ws, "oc", "cam1", {spec.width / 2.0, spec.height / 2.0});
    CHECK(r.trace.converged);
    CHECK(std::abs(r.final_error_mm) < 1e-9);
    CHECK(std::abs(r.ws.get("oc").pose.y) < 1e-9);
}

TEST_CASE("line fit") {
    std::vector<PathSample> exact;
    for (double x : {0.0, 100.0, 250.0, 400.0}) exact.push_back({x, 0.01 * x + 2.0});
    BeamLine l = fit_beam_path(exact);
    CHECK(l.slope == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(l.intercept == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(l.rms_residual < 1e-9);

    std::vector<PathSample> two{{0.0, 1.0}, {10.0, 3.0}};
    l = fit_beam_path(two);
    CHECK(l.slope == doctest::Approx(0.2));
    CHECK(l.rms_residual < 1e-12);

    std::vector<PathSample> same{{5.0, 1.0}, {5.0, 2.0}};
    CHECK_THROWS_AS(fit_beam_path(same), Error);
}

TEST_CASE("noisy line fit stays within three standard errors") {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> noise(0.0, 0.05);
    const double slope = 3e-3;
    int inside = 0;
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<PathSample> s;
        for (int i = 0; i < 10; ++i) s.push_back({75.0 * i, 1.0 + slope * 75.0 * i + noise(rng)});
        double mx = 0.0, sxx = 0.0;
        for (auto& p : s) mx += p.x / s.size();
        for (auto& p : s) sxx += (p.x - mx) * (p.x - mx);
        const double se = 0.05 / std::sqrt(sxx);
        if (std::abs(fit_beam_path(s).slope - slope) <= 3.0 * se) ++inside;
    }
    CHECK(inside >= 48);
}

TEST_CASE("beam path along the table axis") {
    Workspace ws = put(bench(0.1, 4), camera("cam1"), 100.0);
    std::vector<double> xs{150.0, 300.0, 450.0, 600.0, 750.0};
    BeamPathResult r = measure_beam_path(ws, "cam1", xs);
    CHECK(std::abs(r.line.slope) < 1e-3);
    CHECK(std::abs(r.line.intercept) < 0.3);
}

TEST_CASE("beam path recovers a small pump tilt") {
    Workspace ws = bench();
    ws.components.front().params.tilt_deg = 0.02;
    ws = put(std::move(ws), camera("cam1"), 100.0);
    std::vector<double> xs{150.0, 300.0, 450.0, 600.0, 750.0};
    BeamPathResult r = measure_beam_path(ws, "cam1", xs);
    const double expected = std::tan(0.02 * std::numbers::pi / 180.0);
    CHECK(expected == doctest::Approx(3.5e-4).epsilon(0.01));
    CHECK(r.line.slope == doctest::Approx(expected).epsilon(0.1));
}

TEST_CASE("more path samples fit no worse than the sampling noise") {
    std::vector<double> three{150.0, 450.0, 750.0};
    std::vector<double> six{150.0, 270.0, 390.0, 510.0, 630.0, 750.0};
    double spread3 = 0.0, spread6 = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Workspace ws = put(bench(0.1, seed), camera("cam1"), 100.0);
        spread3 += std::pow(measure_beam_path(ws, "cam1", three).line.slope, 2);
        spread6 += std::pow(measure_beam_path(ws, "cam1", six).line.slope, 2);
    }
    CHECK(spread6 <= 2.0 * spread3);
}

}
