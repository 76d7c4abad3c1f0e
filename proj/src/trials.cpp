#include "cavforge/trials.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include "cavforge/beam.hpp"

namespace cavforge {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

const Component& layout_role(const Layout& l, Kind kind) {
    const Component* c = l.first_of(kind);
    if (!c) throw Error(ErrorCode::MissingComponent, "layout has no " + std::string(to_string(kind)));
    return *c;
}

const Component& layout_camera(const Layout& l, CameraPort port) {
    for (const auto& c : l.components) {
        if (c.kind == Kind::Camera && c.params.camera.port == port) return c;
    }
    throw Error(ErrorCode::MissingComponent, "layout lacks a required camera");
}

Workspace bench(const Layout& l, std::uint64_t seed) {
    Workspace ws = Workspace::create(seed, l.placement_noise_sigma_mm);
    ws.tilt_noise_sigma_deg = l.tilt_noise_sigma_deg;
    ws.physics = l.physics;
    ws.components.push_back(layout_role(l, Kind::PumpSource));
    return ws;
}

Workspace put(Workspace ws, const Component& c, double y) {
    Component fresh = c;
    fresh.pose = {};
    Pose target = c.pose;
    target.y = y;
    return place_component(std::move(ws), fresh, target);
}

TrialResult spatial_trial(bool lens, const TrialOptions& opt, TrialResult r) {
    const Layout& l = opt.layout;
    std::mt19937_64 draw(r.seed);
    std::uniform_real_distribution<double> offset(lens ? kLensOffsetMin : kOcOffsetMin,
                                                  lens ? kLensOffsetMax : kOcOffsetMax);
    const double y0 = offset(draw);
    const Component& cam = layout_camera(l, CameraPort::Main);
    const Component& oc = layout_role(l, Kind::MirrorOC);
    const Component& mover = lens ? layout_role(l, Kind::Lens) : oc;

    Workspace ws = bench(l, r.seed);
    ws = put(std::move(ws), layout_role(l, Kind::NDF), 0.0);
    ws = put(std::move(ws), cam, 0.0);
    if (lens) ws = put(std::move(ws), oc, 0.0);
    auto target = vision::centroid(capture(ws, cam.id));
    if (!target) throw Error(ErrorCode::BeamLost, "no reference beam on the main camera");
    ws = put(std::move(ws), mover, y0);

    r.values.emplace_back("initial_offset_mm", y0);
    try {
        SpatialResult sr = spatial_optimize(std::move(ws), mover.id, cam.id, *target, opt.pipeline.spatial);
        r.success = sr.trace.converged;
        r.iterations = sr.trace.iters_used;
        r.values.emplace_back("final_error_mm", sr.final_error_mm);
        r.values.emplace_back("placement_error_mm", sr.ws.get(mover.id).pose.y);
    } catch (const OptimizationError& e) {
        r.iterations = e.trace().iters_used;
        r.detail = e.what();
    }
    return r;
}

TrialResult angular_trial(const TrialOptions& opt, TrialResult r) {
    const Layout& l = opt.layout;
    std::mt19937_64 draw(r.seed);
    const Component& cam = layout_camera(l, CameraPort::BeamSplitter);
    const Component& bs = layout_role(l, Kind::BeamSplitter);
    const Component& oc = layout_role(l, Kind::MirrorOC);
    const CameraSpec& spec = cam.params.camera;
    // Target landing spot of the secondary beam, kept within the sensor.
    std::uniform_real_distribution<double> du(-0.3 * spec.width * spec.pixel_pitch_mm, 0.3 * spec.width * spec.pixel_pitch_mm);
    std::uniform_real_distribution<double> dv(-0.3 * spec.height * spec.pixel_pitch_mm,
                                              0.3 * spec.height * spec.pixel_pitch_mm);
    const double u = du(draw);
    const double v = dv(draw);

    Workspace ws = bench(l, r.seed);
    ws.tilt_noise_sigma_deg = 0.0;
    ws = put(std::move(ws), bs, 0.0);
    ws = put(std::move(ws), cam, 0.0);
    ws = put(std::move(ws), layout_role(l, Kind::BeamBlock), 0.0);
    ws = put(std::move(ws), oc, 0.0);
    CameraFrame reference = capture(ws, cam.id);
    ws = remove_component(std::move(ws), layout_role(l, Kind::BeamBlock).id);

    const Component& placed_oc = ws.get(oc.id);
    const double lever = (placed_oc.pose.x - ws.get(bs.id).pose.x) + spec.arm_mm;
    const double per_knob = placed_oc.knobs->tilt_per_turn / 360.0 * std::numbers::pi / 180.0;  // rad per knob deg
    ws = turn_knob(std::move(ws), oc.id, KnobAxis::H, u / (2.0 * lever) / per_knob);
    ws = turn_knob(std::move(ws), oc.id, KnobAxis::V, v / (2.0 * lever) / per_knob);

    r.values.emplace_back("initial_u_mm", u);
    r.values.emplace_back("initial_v_mm", v);
    AngularOptConfig cfg = opt.pipeline.resonator;
    cfg.max_iters = opt.angular_max_iters;
    cfg.seed = r.seed;
    try {
        AlignResult ar = align_resonator(std::move(ws), oc.id, cam.id, reference, cfg);
        r.success = ar.trace.converged;
        r.iterations = ar.trace.iters_used;
        r.values.emplace_back("final_distance_px", ar.best_cost);
    } catch (const OptimizationError& e) {
        r.iterations = e.trace().iters_used;
        r.detail = e.what();
    }
    return r;
}

TrialResult displacement_trial(const TrialOptions& opt, const PipelineState& ref, TrialResult r) {
    PipelineState st = ref;
    st.ws.rng.seed(r.seed);
    std::uniform_real_distribution<double> mag(10.0, 20.0);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
    const double d = mag(st.ws.rng);
    const double a = ang(st.ws.rng);
    const std::string lens = layout_role(opt.layout, Kind::Lens).id;
    st.ws = inject_displacement(std::move(st.ws), lens, Pose{d * std::cos(a), d * std::sin(a), 0.0, 0.0});
    SurveillanceResult s = surveillance_tick(st);
    r.values.emplace_back("displacement_mm", d);
    r.values.emplace_back("detected", s.kind == Surveillance::Displacement ? 1.0 : 0.0);
    RecoveryReport rep = recover_displacement(st, opt.max_attempts);
    r.success = rep.success;
    r.iterations = rep.realign_attempts;
    r.values.emplace_back("placements", rep.placements);
    r.values.emplace_back("ratio", rep.ratio);
    r.values.emplace_back("mode_order", rep.mode_order);
    r.values.emplace_back("actions", static_cast<double>(rep.actions));
    return r;
}

TrialResult drift_trial(const TrialOptions& opt, const PipelineState& ref, TrialResult r) {
    PipelineState st = ref;
    st.ws.rng.seed(r.seed);
    const std::vector<std::string> mirrors{layout_role(opt.layout, Kind::MirrorIC).id,
                                           layout_role(opt.layout, Kind::MirrorOC).id};
    st.ws = randomize_knobs(std::move(st.ws), mirrors, 30.0, 60.0);
    SurveillanceResult s = surveillance_tick(st);
    r.values.emplace_back("signal_lost", s.kind == Surveillance::SignalLost ? 1.0 : 0.0);
    RecoveryReport rep = recover_drift(st, opt.drift);
    r.success = rep.success;
    r.iterations = rep.iterations;
    r.values.emplace_back("ratio", rep.ratio);
    r.values.emplace_back("mode_order", rep.mode_order);
    double shift = -1.0;
    if (auto c = vision::centroid(capture(st.ws, st.main_camera))) {
        shift = std::hypot(c->px - ref.baseline->centroid.px, c->py - ref.baseline->centroid.py);
    }
    r.values.emplace_back("centroid_shift_px", shift);
    r.values.emplace_back("actions", static_cast<double>(rep.actions));
    return r;
}

TrialResult build_trial(const TrialOptions& opt, TrialResult r) {
    try {
        PipelineState st = run_construction(opt.layout, r.seed, opt.pipeline);
        r.success = st.baseline->mode_order == 0;
        r.iterations = static_cast<int>(st.ws.action_count);
        r.values.emplace_back("step", static_cast<double>(st.current_step));
        r.values.emplace_back("mode_order", st.baseline->mode_order);
        r.values.emplace_back("I_over_M2", st.baseline->i_over_m2);
    } catch (const PipelineError& e) {
        r.iterations = static_cast<int>(e.state().ws.action_count);
        r.values.emplace_back("step", static_cast<double>(e.step()));
        r.values.emplace_back("mode_order", -1);
        r.values.emplace_back("I_over_M2", 0.0);
        r.detail = e.what();
    }
    return r;
}

}  // namespace

std::string_view to_string(Experiment e) {
    switch (e) {
        case Experiment::SpatialOC: return "spatial-oc";
        case Experiment::SpatialLens: return "spatial-lens";
        case Experiment::Angular: return "angular";
        case Experiment::Displacement: return "displacement";
        case Experiment::Drift: return "drift";
        case Experiment::Build: return "build";
    }
    return "unknown";
}

std::optional<Experiment> experiment_from_string(std::string_view name) {
    if (name == "spatial" || name == "spatial-oc") return Experiment::SpatialOC;
    if (name == "spatial-lens") return Experiment::SpatialLens;
    if (name == "angular") return Experiment::Angular;
    if (name == "displacement") return Experiment::Displacement;
    if (name == "drift") return Experiment::Drift;
    if (name == "build") return Experiment::Build;
    return std::nullopt;
}

int BatchSummary::successes() const {
    int n = 0;
    for (const auto& t : trials) n += t.success;
    return n;
}

std::string BatchSummary::to_csv() const {
    std::ostringstream out;
    std::vector<std::string> cols;
    if (!trials.empty()) {
        for (const auto& [k, _] : trials.front().values) cols.push_back(k);
    }
    out << "experiment,trial,seed,success,iterations";
    for (const auto& c : cols) out << ',' << c;
    out << ",detail\n";
    auto clean = [](std::string s) {
        for (char& ch : s) {
            if (ch == ',' || ch == '\n' || ch == '"') ch = ';';
        }
        return s;
    };
    for (const auto& t : trials) {
        out << to_string(experiment) << ',' << t.index << ',' << t.seed << ',' << (t.success ? 1 : 0) << ','
            << t.iterations;
        for (const auto& c : cols) {
            double v = std::nan("");
            for (const auto& [k, val] : t.values) {
                if (k == c) v = val;
            }
            out << ',' << (std::isnan(v) ? std::string() : fmt(v));
        }
        out << ',' << clean(t.detail) << '\n';
    }
    // Aggregate row: success rate, then mean/std per numeric column.
    auto stats = [&](auto get) {
        double sum = 0.0, sq = 0.0;
        int n = 0;
        for (const auto& t : trials) {
            double v = get(t);
            if (std::isnan(v)) continue;
            sum += v;
            sq += v * v;
            ++n;
        }
        if (n == 0) return std::string();
        double mean = sum / n;
        double var = n > 1 ? std::max(0.0, (sq - n * mean * mean) / (n - 1)) : 0.0;
        return fmt(mean) + " +/- " + fmt(std::sqrt(var));
    };
    const int n = static_cast<int>(trials.size());
    out << to_string(experiment) << ",aggregate," << n << ',' << fmt(n ? static_cast<double>(successes()) / n : 0.0)
        << ',' << stats([](const TrialResult& t) { return static_cast<double>(t.iterations); });
    for (const auto& c : cols) {
        out << ',' << stats([&](const TrialResult& t) {
            for (const auto& [k, val] : t.values) {
                if (k == c) return val;
            }
            return std::nan("");
        });
    }
    out << ",successes=" << successes() << '/' << n << '\n';
    return out.str();
}

TrialResult run_trial(Experiment e, int index, const TrialOptions& opt, const PipelineState* reference) {
    TrialResult r;
    r.index = index;
    r.seed = opt.base_seed + static_cast<std::uint64_t>(index);
    switch (e) {
        case Experiment::SpatialOC: return spatial_trial(false, opt, r);
        case Experiment::SpatialLens: return spatial_trial(true, opt, r);
        case Experiment::Angular: return angular_trial(opt, r);
        case Experiment::Build: return build_trial(opt, r);
        case Experiment::Displacement:
        case Experiment::Drift: {
            if (!reference) throw Error(ErrorCode::NoSnapshot, "recovery trials need a completed reference build");
            return e == Experiment::Displacement ? displacement_trial(opt, *reference, r)
                                                 : drift_trial(opt, *reference, r);
        }
    }
    return r;
}

BatchSummary run_batch(Experiment e, int n, const TrialOptions& opt) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "need at least one trial");
    BatchSummary out;
    out.experiment = e;
    std::optional<PipelineState> reference;
    if (e == Experiment::Displacement || e == Experiment::Drift) {
        reference = run_construction(opt.layout, opt.build_seed.value_or(opt.layout.seed), opt.pipeline);
    }
    for (int i = 0; i < n; ++i) {
        out.trials.push_back(run_trial(e, i, opt, reference ? &*reference : nullptr));
    }
    return out;
}

}  // namespace cavforge
