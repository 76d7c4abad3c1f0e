#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cavforge/align.hpp"
#include "cavforge/beam.hpp"
#include "cavforge/bayes.hpp"
#include "objectives.hpp"
#include "support.hpp"

using namespace cavforge;
using namespace cavforge::test;

namespace {

AngularOptConfig unit_box_config(std::uint64_t seed) {
    AngularOptConfig cfg;
    cfg.bound_deg = 1.0;
    cfg.length_scale = 0.3;
    cfg.max_iters = 30;
    cfg.seed = seed;
    return cfg;
}

const Interval kUnit[2] = {{-1.0, 1.0}, {-1.0, 1.0}};

// Aligned resonator with a filtered, attenuated main camera.
Workspace laser_bench(double crystal_theta = 1.3) {
    Workspace ws = bench();
    Component lens = part("lens", Kind::Lens);
    lens.params.focal_mm = 250.0;
    ws = put(std::move(ws), lens, 120.0);
    ws = put(std::move(ws), part("ic", Kind::MirrorIC), 330.0);
    Component crystal = part("crystal", Kind::Crystal);
    crystal.params.theta_deg = crystal_theta;
    ws = put(std::move(ws), crystal, 370.0);
    ws = put(std::move(ws), part("oc", Kind::MirrorOC), 430.0);
    Component ndf = part("ndf", Kind::NDF);
    ndf.params.transmittance = 0.03;
    ws = put(std::move(ws), ndf, 480.0);
    ws = put(std::move(ws), part("bpf", Kind::BPF), 520.0);
    return put(std::move(ws), camera("cam1"), 700.0);
}

}  // namespace

TEST_SUITE("align") {

TEST_CASE("GP interpolates its data") {
    GaussianProcess gp(0.5, 1e-6);
    std::vector<std::vector<double>> x{{0.0}, {0.5}, {1.0}};
    std::vector<double> y{1.0, 3.0, 2.0};
    gp.fit(x, y);
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto p = gp.predict(x[i]);
        CHECK(p.mean == doctest::Approx(y[i]).epsilon(1e-3));
        CHECK(p.sd < 0.05);
    }
    auto far = gp.predict(std::vector<double>{50.0});
    CHECK(far.mean == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(far.sd > gp.predict(x[1]).sd);
    std::vector<double> a{0.0, 0.0}, b{0.5, 0.0};
    CHECK(gp.kernel(a, b) == doctest::Approx(std::exp(-0.5)));
}

TEST_CASE("expected improvement") {
    CHECK(expected_improvement({0.0, 1.0}, 0.0, 0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)));
    CHECK(expected_improvement({1.0, 0.0}, 3.0, 0.5) == doctest::Approx(1.5));
    CHECK(expected_improvement({3.0, 0.0}, 1.0, 0.0) == 0.0);
}

TEST_CASE("config validation") {
    AngularOptConfig cfg;
    cfg.init_samples = 1;
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg = {};
    cfg.max_iters = cfg.init_samples;
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg = {};
    cfg.length_scale = 0.0;
    CHECK_THROWS_AS(validate(cfg), Error);
    auto f = [](const std::vector<double>&) { return Evaluation{0.0, true, {}}; };
    Interval empty[1] = {{1.0, 1.0}};
    CHECK_THROWS_AS(bayesian_optimize(f, empty, AngularOptConfig{}), Error);
}

TEST_CASE("bowl minimum matches a brute-force grid") {
    auto bowl = [](double x, double y) { return (x - 0.3) * (x - 0.3) + 2.0 * (y + 0.4) * (y + 0.4); };
    GridOptimum g = grid_optimum(bowl);
    auto f = [&](const std::vector<double>& x) { return Evaluation{bowl(x[0], x[1]), true, {}}; };
    BayesResult r = bayesian_optimize(f, kUnit, unit_box_config(3));
    CHECK(r.trace.iters_used == 30);
    CHECK(r.best.cost - g.min <= 0.05 * (g.max - g.min));
}

TEST_CASE("immediate success stops after the initial design") {
    auto f = [](const std::vector<double>&) { return Evaluation{0.0, true, {}}; };
    AngularOptConfig cfg = unit_box_config(1);
    BayesResult r = bayesian_optimize(f, kUnit, cfg, [](const Evaluation& e) { return e.cost < 1.0; });
    CHECK(r.trace.converged);
    CHECK(r.trace.iters_used == cfg.init_samples);
}

TEST_CASE("runs are reproducible for a seed") {
    SmoothSurface s = random_surface(8);
    auto f = [&](const std::vector<double>& x) { return Evaluation{s(x[0], x[1]), true, {}}; };
    BayesResult a = bayesian_optimize(f, kUnit, unit_box_config(11));
    BayesResult b = bayesian_optimize(f, kUnit, unit_box_config(11));
    CHECK(a.best_inputs == b.best_inputs);
    REQUIRE(a.trace.iterations.size() == b.trace.iterations.size());
    for (std::size_t i = 0; i < a.trace.iterations.size(); ++i) {
        CHECK(a.trace.iterations[i].inputs == b.trace.iterations[i].inputs);
    }
}

TEST_CASE("dark search region") {
    auto f = [](const std::vector<double>&) { return Evaluation{1.0, false, {}}; };
    AngularOptConfig cfg = unit_box_config(2);
    try {
        bayesian_optimize(f, kUnit, cfg);
        FAIL("expected no signal");
    } catch (const OptimizationError& e) {
        CHECK(e.code() == ErrorCode::NoSignal);
        CHECK(e.trace().iterations.size() == 2u * static_cast<std::size_t>(cfg.init_samples));
    }
    cfg.no_signal = NoSignalPolicy::Explore;
    CHECK(bayesian_optimize(f, kUnit, cfg).trace.iters_used == cfg.max_iters);
}

TEST_CASE("aligned mirror converges during the initial design") {
    Workspace ws = bench();
    ws = put(std::move(ws), part("bs", Kind::BeamSplitter), 60.0);
    Component cam2 = camera("cam2", CameraPort::BeamSplitter);
    ws = put(std::move(ws), cam2, 60.0);
    Workspace blocked = put(ws, part("bb", Kind::BeamBlock), 90.0);
    blocked = put(std::move(blocked), part("oc", Kind::MirrorOC), 430.0);
    CameraFrame reference = capture(blocked, "cam2");
    Workspace open = remove_component(blocked, "bb");
    AngularOptConfig cfg;
    cfg.max_iters = 20;
    AlignResult r = align_resonator(open, "oc", "cam2", reference, cfg);
    CHECK(r.trace.converged);
    CHECK(r.trace.iters_used == cfg.init_samples);
    CHECK(r.best_cost < 1.0);
}

TEST_CASE("alignment pulls a tilted out-coupler into the fundamental band") {
    Workspace ws = bench();
    ws = put(std::move(ws), part("bs", Kind::BeamSplitter), 60.0);
    ws = put(std::move(ws), camera("cam2", CameraPort::BeamSplitter), 60.0);
    Workspace blocked = put(ws, part("bb", Kind::BeamBlock), 90.0);
    blocked = put(std::move(blocked), part("oc", Kind::MirrorOC), 430.0);
    CameraFrame reference = capture(blocked, "cam2");
    Workspace open = remove_component(blocked, "bb");
    open = turn_knob(std::move(open), "oc", KnobAxis::H, 40.0);
    open = turn_knob(std::move(open), "oc", KnobAxis::V, -25.0);
    AngularOptConfig cfg;
    cfg.max_iters = 20;
    AlignResult r = align_resonator(open, "oc", "cam2", reference, cfg);
    REQUIRE(r.trace.converged);
    const Component& oc = r.ws.get("oc");
    const double units = std::hypot(oc.tilt_h_deg(), oc.tilt_v_deg()) / r.ws.physics.tilt_unit_deg;
    // A lone mirror contributes units / 2 to the cavity metric.
    CHECK(units / 2.0 < r.ws.physics.mode_band_edges.front());
}

TEST_CASE("crystal sweep peaks at the gain center") {
    SweepResult s = crystal_sweep(laser_bench(0.1), "cam1", 0.1, 2.9, 0.2);
    CHECK(std::abs(s.best_theta - 1.3) <= 0.1 + 1e-12);
    CHECK(s.ws.get("crystal").params.theta_deg == s.best_theta);

    // Acceptance half-width of the aligned cavity: cutoff * 2 * crystal unit.
    const double half = s.ws.physics.misalignment_cutoff * 2.0 * s.ws.physics.crystal_unit_deg;
    const double step = 2.0 * half / 10.0;
    SweepResult fine = crystal_sweep(laser_bench(0.1), "cam1", 1.3 - half - step, 1.3 + half + step, step);
    int lit = 0;
    for (auto [theta, intensity] : fine.profile) lit += intensity > 0.0;
    CHECK(lit >= 9);
}

TEST_CASE("crystal sweep with no gain anywhere") {
    Workspace ws = laser_bench();
    ws = remove_component(std::move(ws), "ic");
    ws = put(std::move(ws), part("ic", Kind::MirrorIC), 330.0);
    ws = turn_knob(std::move(ws), "ic", KnobAxis::H, 720.0);
    CHECK_THROWS_AS(crystal_sweep(ws, "cam1", 0.1, 2.9), Error);
}

TEST_CASE("mode objective never beats the aligned optimum") {
    Workspace ws = laser_bench();
    ModeMeasurement start = measure_mode(ws, "cam1", ModeObjective::SqrtIOverM2);
    REQUIRE(start.detected);
    CHECK(start.m_squared == doctest::Approx(1.0).epsilon(0.05));
    const std::vector<std::string> ids{"oc"};
    auto knobs = knobs_of(ids);
    AngularOptConfig cfg;
    cfg.bound_deg = 30.0;
    cfg.max_iters = 12;
    cfg.no_signal = NoSignalPolicy::Explore;
    ModeResult r = optimize_mode(ws, knobs, "cam1", ModeObjective::SqrtIOverM2, cfg);
    for (const auto& it : r.trace.iterations) CHECK(-it.objective <= start.objective * (1.0 + 1e-9));
    CHECK(r.best.objective == doctest::Approx(start.objective).epsilon(1e-9));
}

TEST_CASE("mode optimization restores the fundamental mode") {
    Workspace ws = laser_bench();
    ws = turn_knob(std::move(ws), "oc", KnobAxis::H, 40.0);
    CHECK(cavity_response(ws).mode_order > 0);
    const std::vector<std::string> ids{"oc"};
    auto knobs = knobs_of(ids);
    AngularOptConfig cfg;
    cfg.bound_deg = 60.0;
    cfg.max_iters = 20;
    cfg.no_signal = NoSignalPolicy::Explore;
    ModeResult r = optimize_mode(ws, knobs, "cam1", ModeObjective::SqrtIOverM2, cfg);
    CHECK(cavity_response(r.ws).mode_order == 0);
}

}
