#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cavforge/beam.hpp"
#include "cavforge/layout.hpp"
#include "cavforge/pipeline.hpp"
#include "cavforge/trials.hpp"

using namespace cavforge;

namespace {

Layout quiet_layout() {
    Layout l = default_layout();
    l.placement_noise_sigma_mm = 0.0;
    l.tilt_noise_sigma_deg = 0.0;
    return l;
}

const PipelineState& quiet_build() {
    static const PipelineState s = run_construction(quiet_layout(), 1);
    return s;
}

const PipelineState& noisy_build() {
    static const PipelineState s = run_construction(default_layout(), 42);
    return s;
}

const std::vector<std::string> kMirrors{"ic", "oc"};

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("power curve fit on exact data") {
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i <= 10; ++i) {
        double p = 0.3 * i;
        pts.emplace_back(p, p > 1.2 ? 0.25 * (p - 1.2) : 0.0);
    }
    PowerCurve c = fit_power_curve(pts);
    CHECK(c.threshold == doctest::Approx(1.2).epsilon(1e-9));
    CHECK(c.slope == doctest::Approx(0.25).epsilon(1e-9));
    std::vector<std::pair<double, double>> dark{{0.1, 0.0}, {0.5, 0.0}};
    CHECK_THROWS_AS(fit_power_curve(dark), Error);
}

TEST_CASE("noise-free construction reaches the fundamental mode") {
    const PipelineState& s = quiet_build();
    CHECK(s.current_step == StepId::LasingVerified);
    REQUIRE(s.baseline);
    CHECK(s.baseline->mode_order == 0);
    CHECK(s.ws.snapshot.has_value());
    CHECK(s.parked.empty());
}

TEST_CASE("log steps never run ahead of their predecessor") {
    const PipelineState& s = noisy_build();
    int highest = 0;
    for (const auto& e : s.log) {
        CHECK(e.step <= highest + 1);
        CHECK(e.step >= highest);
        highest = std::max(highest, e.step);
    }
    CHECK(highest == static_cast<int>(StepId::LasingVerified));
    for (std::size_t i = 1; i < s.log.size(); ++i) CHECK(s.log[i].index >= s.log[i - 1].index);
}

TEST_CASE("reference frames exist before alignment uses them") {
    const PipelineState& s = noisy_build();
    CHECK(s.reference_frames.count(s.side_camera) == 1);
    auto ref = std::find_if(s.log.begin(), s.log.end(), [](const Event& e) { return e.action == "reference.frame"; });
    auto align = std::find_if(s.log.begin(), s.log.end(), [](const Event& e) { return e.action.rfind("align.", 0) == 0; });
    REQUIRE(ref != s.log.end());
    REQUIRE(align != s.log.end());
    CHECK(ref < align);
}

TEST_CASE("aligned build power curve recovers the gain constants") {
    const PipelineState& s = quiet_build();
    std::vector<double> powers;
    for (int i = 0; i <= 10; ++i) powers.push_back(0.3 * i);
    PowerCurve c = measure_power_curve(s.ws, powers);
    CHECK(c.threshold == doctest::Approx(s.ws.physics.threshold_power).epsilon(0.02));
    CHECK(c.slope == doctest::Approx(s.ws.physics.slope_efficiency).epsilon(0.02));

    Workspace tilted = turn_knob(s.ws, "oc", KnobAxis::H, 20.0);
    CHECK(measure_power_curve(tilted, powers).threshold > c.threshold);

    std::vector<double> low{0.1, 0.3, 0.5};
    CHECK_THROWS_AS(measure_power_curve(s.ws, low), Error);
}

TEST_CASE("missing band-pass filter aborts at its step") {
    Layout l = quiet_layout();
    std::erase_if(l.components, [](const Component& c) { return c.kind == Kind::BPF; });
    try {
        run_construction(l, 1);
        FAIL("expected a pipeline error");
    } catch (const PipelineError& e) {
        CHECK(e.step() == StepId::PlaceBPF);
        CHECK(e.code() == ErrorCode::MissingComponent);
        CHECK(e.state().current_step == StepId::AngularOptIC);
    }
}

TEST_CASE("saturating layout fails at a vision step") {
    Layout l = quiet_layout();
    for (auto& c : l.components)
        if (c.kind == Kind::NDF) c.params.transmittance = 1.0;
    try {
        run_construction(l, 1);
        FAIL("expected a pipeline error");
    } catch (const PipelineError& e) {
        CHECK(e.code() == ErrorCode::Saturation);
    }
}

TEST_CASE("surveillance classification") {
    PipelineState s = noisy_build();
    CHECK(surveillance_tick(s).kind == Surveillance::Ok);

    PipelineState d = s;
    d.ws = inject_displacement(std::move(d.ws), "lens", Pose{10.0, 0.0, 0.0, 0.0});
    auto r = surveillance_tick(d);
    CHECK(r.kind == Surveillance::Displacement);
    REQUIRE(r.displaced.size() == 1);
    CHECK(r.displaced[0].id == "lens");

    PipelineState k = s;
    k.ws = randomize_knobs(std::move(k.ws), kMirrors, 30.0, 60.0);
    CHECK(surveillance_tick(k).kind == Surveillance::SignalLost);

    PipelineState none;
    CHECK_THROWS_AS(surveillance_tick(none), Error);
}

TEST_CASE("noise-free displacement recovery takes one placement") {
    PipelineState s = quiet_build();
    s.ws = inject_displacement(std::move(s.ws), "lens", Pose{0.0, 15.0, 0.0, 0.0});
    RecoveryReport r = recover(s);
    CHECK(r.scenario == "displacement");
    CHECK(r.success);
    CHECK(r.placements == 1);
    CHECK(r.realign_attempts == 0);
    CHECK(r.components == std::vector<std::string>{"lens"});
    CHECK(r.ratio == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("undisturbed recovery is idempotent") {
    PipelineState s = quiet_build();
    RecoveryReport r = recover_displacement(s);
    CHECK(r.success);
    CHECK(r.placements == 1);
    CHECK(r.realign_attempts == 0);
    RecoveryReport none = recover(s);
    CHECK(none.scenario == "none");
    CHECK(none.success);
}

TEST_CASE("drift without a real loss converges on the initial design") {
    PipelineState s = noisy_build();
    DriftConfig cfg;
    RecoveryReport r = recover_drift(s, cfg);
    CHECK(r.success);
    CHECK(r.iterations == cfg.bo.init_samples);
}

TEST_CASE("drift recovery restores the fundamental mode near the old spot") {
    PipelineState s = noisy_build();
    s.ws.rng.seed(3);
    s.ws = randomize_knobs(std::move(s.ws), kMirrors, 30.0, 60.0);
    RecoveryReport r = recover(s);
    CHECK(r.scenario == "drift");
    REQUIRE(r.success);
    CHECK(r.ratio >= 0.9);
    CHECK(r.ratio <= r.best_ratio + 1e-12);
    CHECK(r.mode_order == 0);
    Baseline now = measure_baseline(s.ws, s.main_camera);
    const double waist_px = s.ws.physics.laser_waist_mm / s.ws.get(s.main_camera).params.camera.pixel_pitch_mm;
    CHECK(std::hypot(now.centroid.px - s.baseline->centroid.px, now.centroid.py - s.baseline->centroid.py) <
          waist_px);
}

TEST_CASE("recovery reports replay from the seed") {
    auto run = [] {
        PipelineState s = noisy_build();
        s.ws.rng.seed(5);
        s.ws = randomize_knobs(std::move(s.ws), kMirrors, 30.0, 60.0);
        return recover(s);
    };
    RecoveryReport a = run(), b = run();
    CHECK(a.iterations == b.iterations);
    CHECK(a.ratio == b.ratio);
    CHECK(a.actions == b.actions);
}

TEST_CASE("trial batches") {
    TrialOptions opt;
    BatchSummary one = run_batch(Experiment::SpatialOC, 1, opt);
    REQUIRE(one.trials.size() == 1);
    std::string csv = one.to_csv();
    CHECK(csv.find("successes=") != std::string::npos);
    CHECK(experiment_from_string("spatial") == Experiment::SpatialOC);
    CHECK_FALSE(experiment_from_string("bogus").has_value());
    CHECK_THROWS_AS(run_batch(Experiment::SpatialOC, 0, opt), Error);
    CHECK(run_batch(Experiment::Angular, 2, opt).to_csv() == run_batch(Experiment::Angular, 2, opt).to_csv());
}

}
