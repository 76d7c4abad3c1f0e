#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "abcd_oracle.hpp"
#include "cavforge/beam.hpp"
#include "cavforge/vision.hpp"
#include "support.hpp"

using namespace cavforge;
using namespace cavforge::test;

namespace {

constexpr double kRad = std::numbers::pi / 180.0;

Workspace cavity(double theta_deg, double oc_tilt_v_deg = 0.0) {
    Workspace ws = bench();
    Component lens = part("lens", Kind::Lens);
    lens.params.focal_mm = 250.0;
    ws = put(std::move(ws), lens, 120.0);
    ws = put(std::move(ws), part("ic", Kind::MirrorIC), 330.0);
    Component crystal = part("crystal", Kind::Crystal);
    crystal.params.theta_deg = theta_deg;
    ws = put(std::move(ws), crystal, 370.0);
    Component oc = part("oc", Kind::MirrorOC);
    oc.params.mount_tilt_v_deg = oc_tilt_v_deg;
    return put(std::move(ws), oc, 430.0);
}

}  // namespace

TEST_SUITE("beam-physics") {

TEST_CASE("free propagation hits the sensor center at full power") {
    Workspace ws = put(bench(), camera("cam1"), 300.0);
    TraceResult tr = trace_beam(ws);
    const CameraHit* h = tr.hit_on("cam1");
    REQUIRE(h);
    CHECK(h->u_mm == 0.0);
    CHECK(h->v_mm == 0.0);
    CHECK(h->power == 3.0);
}

TEST_CASE("decentered lens steers the beam through its focus") {
    Workspace ws = put(bench(), part("lens", Kind::Lens), 100.0, 1.0);
    ws = put(std::move(ws), camera("cam1"), 200.0);
    const TraceResult tr = trace_beam(ws);
    const CameraHit* h = tr.hit_on("cam1");
    REQUIRE(h);
    auto oracle = abcd_propagate(0.0, 0.0, 0.3, ws.physics.pump_wavelength_mm, {{100.0, 100.0, 1.0}}, 200.0);
    CHECK(h->u_mm == doctest::Approx(oracle.y).epsilon(1e-12));
    CHECK(h->u_mm == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(h->waist_mm == doctest::Approx(oracle.waist).epsilon(1e-9));
}

TEST_CASE("random lens stacks match matrix products") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> pos(20.0, 900.0), focal(50.0, 800.0), off(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Workspace ws = bench();
        ws.components.front().params.tilt_deg = 0.01 * off(rng);
        std::vector<Element> lenses;
        const int n = 1 + trial % 4;
        for (int i = 0; i < n; ++i) {
            Component l = part("l" + std::to_string(i), Kind::Lens);
            l.params.focal_mm = focal(rng);
            double x = pos(rng), c = off(rng);
            ws = put(std::move(ws), l, x, c);
            lenses.push_back({x, l.params.focal_mm, c});
        }
        std::sort(lenses.begin(), lenses.end(), [](auto& a, auto& b) { return a.x < b.x; });
        ws = put(std::move(ws), camera("cam1"), 1000.0);
        const TraceResult tr = trace_beam(ws);
        const CameraHit* h = tr.hit_on("cam1");
        REQUIRE(h);
        auto oracle = abcd_propagate(0.0, ws.components.front().params.tilt_deg * kRad, 0.3,
                                     ws.physics.pump_wavelength_mm, lenses, 1000.0);
        CHECK(std::abs(h->u_mm - oracle.y) < 1e-9);
        CHECK(h->waist_mm == doctest::Approx(oracle.waist).epsilon(1e-9));
    }
}

TEST_CASE("beam block and band-pass filter stop the pump") {
    Workspace ws = put(bench(), camera("cam1"), 300.0);
    CHECK(trace_beam(put(ws, part("bb", Kind::BeamBlock), 100.0)).hits.empty());
    CHECK(trace_beam(put(ws, part("bpf", Kind::BPF), 100.0)).hits.empty());
    Component ndf = part("ndf", Kind::NDF);
    ndf.params.transmittance = 0.1;
    CHECK(trace_beam(put(ws, ndf, 100.0)).hit_on("cam1")->power == doctest::Approx(0.3));
}

TEST_CASE("mirror tilt deflects the return by twice the angle") {
    Workspace ws = bench();
    Component bs = part("bs", Kind::BeamSplitter);
    ws = put(std::move(ws), bs, 50.0);
    Component cam2 = camera("cam2", CameraPort::BeamSplitter);
    cam2.params.camera.arm_mm = 150.0;
    ws = put(std::move(ws), cam2, 50.0);
    Workspace aligned = put(ws, part("oc", Kind::MirrorOC), 100.0);

    const TraceResult tr = trace_beam(aligned);
    const CameraHit* primary = tr.hit_on("cam2");
    auto sec = secondary_beam(aligned, "cam2");
    REQUIRE(primary);
    REQUIRE(sec);
    CHECK(sec->u_mm == doctest::Approx(primary->u_mm));
    CHECK(sec->v_mm == doctest::Approx(primary->v_mm));

    Workspace tilted = place_component(ws, part("oc", Kind::MirrorOC), Pose{100.0, 0.0, 0.0, 0.05});
    sec = secondary_beam(tilted, "cam2");
    REQUIRE(sec);
    const double expected = 2.0 * 0.05 * kRad * 200.0;
    CHECK(sec->u_mm - primary->u_mm == doctest::Approx(expected).epsilon(1e-9));
    CHECK(expected == doctest::Approx(0.349).epsilon(1e-3));

    Workspace blocked = put(aligned, part("bb", Kind::BeamBlock), 75.0);
    CHECK_FALSE(secondary_beam(blocked, "cam2").has_value());
}

TEST_CASE("resonator round trip follows both mirror tilts") {
    Workspace ws = put(bench(), part("ic", Kind::MirrorIC), 100.0);
    ws = put(std::move(ws), camera("cam1"), 400.0);
    Workspace aligned = put(ws, part("oc", Kind::MirrorOC), 200.0);
    auto sec = secondary_beam(aligned, "cam1");
    REQUIRE(sec);
    CHECK(sec->u_mm == doctest::Approx(0.0));

    const double d = 0.01;  // degrees
    Workspace tilted = place_component(ws, part("oc", Kind::MirrorOC), Pose{200.0, 0.0, 0.0, d});
    sec = secondary_beam(tilted, "cam1");
    REQUIRE(sec);
    // back = 2d; at IC: -2d L; out slope -2d; at OC: -4d L; at camera: -4d L - 2d (400 - 200).
    const double t = d * kRad;
    CHECK(sec->u_mm == doctest::Approx(-4.0 * t * 100.0 - 2.0 * t * 200.0).epsilon(1e-9));
}

TEST_CASE("rendering") {
    Component cam = camera("cam1");
    const CameraSpec& spec = cam.params.camera;
    CameraHit centered{"cam1", 0.0, 0.0, 0.3, 0.01, 0, Wavelength::Pump};
    auto frame = render_frame(std::span(&centered, 1), cam);
    auto c = vision::centroid(frame);
    REQUIRE(c);
    CHECK(c->px == doctest::Approx(spec.width / 2.0).epsilon(1e-6));
    CHECK(c->py == doctest::Approx(spec.height / 2.0).epsilon(1e-6));
    CHECK(frame.peak() < 1.0);

    CameraHit dark = centered;
    dark.power = 0.0;
    auto blank = render_frame(std::span(&dark, 1), cam);
    CHECK(blank.peak() == 0.0);

    CameraHit bright = centered;
    bright.power = 3.0;
    CHECK(render_frame(std::span(&bright, 1), cam).saturated_pixels() >= 1);
}

TEST_CASE("lasing threshold") {
    Workspace ws = cavity(1.3);
    const double pth0 = ws.physics.threshold_power;
    auto below = cavity_response(ws, 0.9 * pth0);
    CHECK(below.misalignment_metric == doctest::Approx(0.0).epsilon(1e-9));
    CHECK_FALSE(below.lasing);
    CHECK(below.output_power == 0.0);

    auto at = cavity_response(ws, below.threshold_power);
    CHECK(at.output_power == 0.0);

    auto above = cavity_response(ws, 3.0);
    CHECK(above.lasing);
    CHECK(above.mode_order == 0);
    CHECK(above.output_power == doctest::Approx(ws.physics.slope_efficiency * (3.0 - pth0)));
}

TEST_CASE("misalignment narrows the crystal acceptance window") {
    // An OC tilt worth about 3.5 tilt units leaves room for roughly 0.14 deg of crystal error.
    for (double theta : {1.1, 1.5, 0.5, 2.1}) CHECK_FALSE(cavity_response(cavity(theta, 0.0707)).lasing);
    for (double theta : {1.2, 1.3, 1.4}) CHECK(cavity_response(cavity(theta, 0.0707)).lasing);
    CHECK(cavity_response(cavity(1.1)).lasing);
}

TEST_CASE("threshold grows with misalignment") {
    auto aligned = cavity_response(cavity(1.3));
    auto tilted = cavity_response(cavity(1.3, 0.02));
    CHECK(tilted.misalignment_metric == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(tilted.threshold_power > aligned.threshold_power);
    CHECK(tilted.threshold_power == doctest::Approx(1.0 * (1.0 + 0.5 * 0.25)));
}

TEST_CASE("cavity needs all four elements") {
    Workspace ws = put(bench(), part("ic", Kind::MirrorIC), 100.0);
    CHECK_THROWS_AS(cavity_response(ws, 3.0), Error);
}

}
