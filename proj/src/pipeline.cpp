#include "cavforge/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cavforge/beam.hpp"

namespace cavforge {

std::string_view to_string(StepId step) {
    switch (step) {
        case StepId::None: return "None";
        case StepId::ScatterInit: return "ScatterInit";
        case StepId::PlaceCamsNDF: return "PlaceCamsNDF";
        case StepId::PlaceOC_SpatialOpt: return "PlaceOC_SpatialOpt";
        case StepId::PlaceBB: return "PlaceBB";
        case StepId::PlaceBS_Reference: return "PlaceBS_Reference";
        case StepId::RemoveBB_AngularOptOC: return "RemoveBB_AngularOptOC";
        case StepId::RemoveBS_PlaceLens_SpatialOpt: return "RemoveBS_PlaceLens_SpatialOpt";
        case StepId::PlaceIC: return "PlaceIC";
        case StepId::AngularOptIC: return "AngularOptIC";
        case StepId::PlaceBPF: return "PlaceBPF";
        case StepId::PlaceCrystal: return "PlaceCrystal";
        case StepId::LasingVerified: return "LasingVerified";
    }
    return "Unknown";
}

std::string_view to_string(Surveillance s) {
    switch (s) {
        case Surveillance::Ok: return "ok";
        case Surveillance::Displacement: return "displacement";
        case Surveillance::SignalLost: return "signal_lost";
    }
    return "unknown";
}

AngularOptConfig PipelineConfig::default_mode_config() {
    AngularOptConfig c;
    c.bound_deg = 60.0;
    c.max_iters = 20;
    c.init_samples = 5;
    c.length_scale = 15.0;
    c.no_signal = NoSignalPolicy::Explore;
    return c;
}

AngularOptConfig DriftConfig::default_bo() {
    AngularOptConfig c;
    c.bound_deg = 70.0;
    c.max_iters = 60;
    c.init_samples = 5;
    c.length_scale = 20.0;
    c.no_signal = NoSignalPolicy::Explore;
    return c;
}

PowerCurve fit_power_curve(std::span<const std::pair<double, double>> points) {
    PowerCurve pc;
    pc.points.assign(points.begin(), points.end());
    std::vector<std::pair<double, double>> on;
    for (const auto& p : points) {
        if (p.second > 0.0) on.push_back(p);
    }
    if (on.empty()) throw Error(ErrorCode::NoLasing, "no lasing at any pump power");
    if (on.size() < 2) throw Error(ErrorCode::DegenerateResponse, "need two lasing points to fit the power curve");
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : on) {
        mx += x;
        my += y;
    }
    mx /= static_cast<double>(on.size());
    my /= static_cast<double>(on.size());
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : on) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if (!(sxx > 0.0)) throw Error(ErrorCode::DegenerateResponse, "lasing points share one pump power");
    pc.slope = sxy / sxx;
    pc.threshold = mx - my / pc.slope;
    return pc;
}

PowerCurve measure_power_curve(const Workspace& ws, std::span<const double> pump_powers) {
    std::vector<std::pair<double, double>> pts;
    for (double p : pump_powers) pts.emplace_back(p, cavity_response(ws, p).output_power);
    return fit_power_curve(pts);
}

Baseline measure_baseline(const Workspace& ws, std::string_view camera_id) {
    ModeMeasurement m = measure_mode(ws, camera_id, ModeObjective::IOverM2);
    Baseline b;
    b.intensity = m.intensity;
    b.m_squared = m.m_squared;
    if (m.detected) {
        b.i_over_m2 = m.intensity / m.m_squared;
        b.sqrt_i_over_m2 = std::sqrt(m.intensity) / m.m_squared;
        if (auto c = vision::centroid(capture(ws, camera_id))) b.centroid = *c;
    }
    CavityState cav = cavity_response(ws);
    b.mode_order = cav.lasing ? cav.mode_order : -1;
    b.output_power = cav.output_power;
    return b;
}

namespace {

class Builder {
public:
    Builder(const Layout& layout, std::uint64_t seed, const PipelineConfig& cfg, const StepCallback& cb)
        : layout_(layout), cfg_(cfg), cb_(cb) {
        st_.ws = Workspace::create(seed, layout.placement_noise_sigma_mm);
        st_.ws.tilt_noise_sigma_deg = layout.tilt_noise_sigma_deg;
        st_.ws.physics = layout.physics;
    }

    PipelineState run() {
        step(StepId::ScatterInit, [this] { scatter_and_measure_path(); });
        step(StepId::PlaceCamsNDF, [this] { place_cams_ndf(); });
        step(StepId::PlaceOC_SpatialOpt, [this] { place_oc(); });
        step(StepId::PlaceBB, [this] { place_bb(); });
        step(StepId::PlaceBS_Reference, [this] { place_bs(); });
        step(StepId::RemoveBB_AngularOptOC, [this] { align_oc(); });
        step(StepId::RemoveBS_PlaceLens_SpatialOpt, [this] { place_lens(); });
        step(StepId::PlaceIC, [this] { place_ic(); });
        step(StepId::AngularOptIC, [this] { align_ic(); });
        step(StepId::PlaceBPF, [this] { place_bpf(); });
        step(StepId::PlaceCrystal, [this] { place_crystal(); });
        step(StepId::LasingVerified, [this] { verify_lasing(); });
        return std::move(st_);
    }

private:
    template <class F>
    void step(StepId id, F&& body) {
        current_ = id;
        try {
            body();
        } catch (const PipelineError&) {
            throw;
        } catch (const Error& e) {
            log("step.failed", {}, std::string(to_string(e.code())) + ": " + e.what());
            throw PipelineError(id, e.code(), "step " + std::to_string(static_cast<int>(id)) + " (" +
                                                  std::string(to_string(id)) + ") failed: " + e.what(),
                                st_);
        }
        st_.current_step = id;
        log("step.done", {});
        if (cb_) cb_(st_);
    }

    void log(std::string action, std::vector<std::pair<std::string, double>> m, std::string detail = {}) {
        st_.log.push_back({static_cast<int>(current_), std::move(action), std::move(m), st_.ws.action_count,
                           std::move(detail)});
    }

    void log_trace(const std::string& prefix, const OptTrace& t) {
        for (const auto& it : t.iterations) {
            std::vector<std::pair<std::string, double>> m;
            for (std::size_t i = 0; i < it.inputs.size(); ++i) m.emplace_back("in" + std::to_string(i), it.inputs[i]);
            for (std::size_t i = 0; i < it.measurement.size(); ++i) {
                m.emplace_back("m" + std::to_string(i), it.measurement[i]);
            }
            m.emplace_back("objective", it.objective);
            log(prefix + "." + it.action, std::move(m));
        }
        log(prefix + ".done", {{"converged", t.converged ? 1.0 : 0.0}, {"iters", static_cast<double>(t.iters_used)}});
    }

    const Component& role(Kind kind) const {
        const Component* c = layout_.first_of(kind);
        if (!c) throw Error(ErrorCode::MissingComponent, "layout has no " + std::string(to_string(kind)));
        return *c;
    }

    const Component& camera(CameraPort port) const {
        for (const auto& c : layout_.components) {
            if (c.kind == Kind::Camera && c.params.camera.port == port) return c;
        }
        throw Error(ErrorCode::MissingComponent,
                    port == CameraPort::Main ? "layout has no main camera" : "layout has no beam-splitter camera");
    }

    // Nominal pose on the measured pump line.
    Pose on_path(const Component& c) const {
        Pose p = c.pose;
        if (!(c.kind == Kind::Camera && c.params.camera.port == CameraPort::BeamSplitter)) {
            p.y = st_.beam_path.at(p.x) + c.pose.y;
        }
        return p;
    }

    void place(const Component& c) { place_at(c, on_path(c)); }

    void place_at(const Component& c, const Pose& target) {
        Component fresh = c;
        fresh.pose = Pose{};
        st_.ws = place_component(std::move(st_.ws), fresh, target);
        st_.parked.erase(c.id);
        const Pose& got = st_.ws.get(c.id).pose;
        log("place." + c.id, {{"x", got.x}, {"y", got.y}, {"yaw", got.yaw}});
    }

    void remove(const std::string& id) {
        st_.ws = remove_component(std::move(st_.ws), id);
        log("remove." + id, {});
    }

    CameraFrame capture_checked(const std::string& cam) {
        CameraFrame f = capture(st_.ws, cam);
        if (f.saturated_pixels() > 0) {
            throw Error(ErrorCode::Saturation, "camera '" + cam + "' saturated (" +
                                                   std::to_string(f.saturated_pixels()) + " pixels at full scale)");
        }
        return f;
    }

    vision::PixelPoint centroid_of(const CameraFrame& f, const std::string& cam) {
        auto c = vision::centroid(f);
        if (!c) throw Error(ErrorCode::BeamLost, "no beam on camera '" + cam + "'");
        return *c;
    }

    void spatial(const std::string& id, const std::string& cam, vision::PixelPoint target, SpatialOptConfig scfg) {
        SpatialResult r;
        try {
            r = spatial_optimize(std::move(st_.ws), id, cam, target, scfg);
        } catch (const OptimizationError& e) {
            log_trace("spatial." + id, e.trace());
            throw;
        }
        st_.ws = std::move(r.ws);
        log_trace("spatial." + id, r.trace);
        if (!r.trace.converged) {
            throw Error(ErrorCode::NotConverged, "spatial optimization of '" + id + "' did not converge (error " +
                                                     std::to_string(r.final_error_mm) + " mm)");
        }
    }

    void resonator(const std::string& mirror, const std::string& cam) {
        auto ref = st_.reference_frames.find(cam);
        if (ref == st_.reference_frames.end()) {
            throw Error(ErrorCode::NoSnapshot, "no reference frame stored for '" + cam + "'");
        }
        AngularOptConfig acfg = cfg_.resonator;
        acfg.seed = st_.ws.rng_seed * 31 + static_cast<std::uint64_t>(current_);
        AlignResult r;
        try {
            r = align_resonator(std::move(st_.ws), mirror, cam, ref->second, acfg);
        } catch (const OptimizationError& e) {
            log_trace("align." + mirror, e.trace());
            throw;
        }
        st_.ws = std::move(r.ws);
        log_trace("align." + mirror, r.trace);
        if (!r.trace.converged) {
            throw Error(ErrorCode::NotConverged, "resonator alignment of '" + mirror + "' ended " +
                                                     std::to_string(r.best_cost) + " px from the primary beam");
        }
    }

    void scatter_and_measure_path() {
        const Component& pump = role(Kind::PumpSource);
        Component p = pump;
        validate_component(p);
        st_.ws.components.insert(st_.ws.components.begin(), p);  // fixed to the table, not robot-placed
        std::uniform_real_distribution<double> side(120.0, 280.0);
        for (const auto& c : layout_.components) {
            if (c.kind == Kind::PumpSource) continue;
            Pose parked{c.pose.x, side(st_.ws.rng), 0.0, 0.0};
            st_.parked[c.id] = parked;
            log("scatter." + c.id, {{"x", parked.x}, {"y", parked.y}});
        }
        const Component& cam = camera(CameraPort::Main);
        st_.main_camera = cam.id;
        if (cfg_.path_x_mm.size() < 2) throw Error(ErrorCode::InvalidArgument, "beam path needs two x positions");
        place_at(cam, Pose{cfg_.path_x_mm.front(), pump.pose.y, 0.0, 0.0});
        BeamPathResult bp = measure_beam_path(std::move(st_.ws), cam.id, cfg_.path_x_mm, cfg_.spatial);
        st_.ws = std::move(bp.ws);
        st_.beam_path = bp.line;
        for (const auto& s : bp.samples) log("path.sample", {{"x", s.x}, {"y", s.y}});
        log("path.fit", {{"slope", bp.line.slope}, {"intercept", bp.line.intercept}, {"rms", bp.line.rms_residual}});
    }

    void place_cams_ndf() {
        const Component& cam1 = camera(CameraPort::Main);
        const Component& cam2 = camera(CameraPort::BeamSplitter);
        st_.side_camera = cam2.id;
        st_.ws = move_component(std::move(st_.ws), cam1.id, on_path(cam1));
        log("move." + cam1.id, {{"x", st_.ws.get(cam1.id).pose.x}, {"y", st_.ws.get(cam1.id).pose.y}});
        place(role(Kind::NDF));
        place(cam2);
        CameraFrame f = capture_checked(cam1.id);
        vision::PixelPoint c = centroid_of(f, cam1.id);
        st_.reference_centroids[cam1.id] = c;
        log("reference.centroid", {{"px", c.px}, {"py", c.py}, {"peak", f.peak()}});
    }

    void place_oc() {
        const Component& oc = role(Kind::MirrorOC);
        place(oc);
        spatial(oc.id, st_.main_camera, st_.reference_centroids.at(st_.main_camera), cfg_.spatial);
    }

    void place_bb() {
        place(role(Kind::BeamBlock));
        if (vision::centroid(capture(st_.ws, st_.main_camera))) {
            throw Error(ErrorCode::InvalidArgument, "beam block does not block the pump");
        }
    }

    void place_bs() {
        const Component& bs = role(Kind::BeamSplitter);
        place(bs);
        const CameraSpec& spec = st_.ws.get(st_.side_camera).params.camera;
        SpatialOptConfig scfg = cfg_.spatial;
        scfg.tolerance_mm = cfg_.bs_tolerance_fraction * spec.width * spec.pixel_pitch_mm;
        spatial(bs.id, st_.side_camera, {spec.width / 2.0, spec.height / 2.0}, scfg);
        CameraFrame ref = capture_checked(st_.side_camera);
        vision::PixelPoint c = centroid_of(ref, st_.side_camera);
        st_.reference_frames[st_.side_camera] = std::move(ref);
        st_.reference_centroids[st_.side_camera] = c;
        log("reference.frame", {{"px", c.px}, {"py", c.py}}, st_.side_camera);
    }

    void align_oc() {
        remove(role(Kind::BeamBlock).id);
        resonator(role(Kind::MirrorOC).id, st_.side_camera);
    }

    void place_lens() {
        remove(role(Kind::BeamSplitter).id);
        const Component& lens = role(Kind::Lens);
        place(lens);
        spatial(lens.id, st_.main_camera, st_.reference_centroids.at(st_.main_camera), cfg_.spatial);
        CameraFrame ref = capture_checked(st_.main_camera);
        vision::PixelPoint c = centroid_of(ref, st_.main_camera);
        st_.reference_frames[st_.main_camera] = std::move(ref);
        log("reference.frame", {{"px", c.px}, {"py", c.py}}, st_.main_camera);
    }

    void place_ic() {
        place(role(Kind::MirrorIC));
        centroid_of(capture_checked(st_.main_camera), st_.main_camera);
    }

    void align_ic() { resonator(role(Kind::MirrorIC).id, st_.main_camera); }

    void place_bpf() {
        place(role(Kind::BPF));
        if (vision::centroid(capture(st_.ws, st_.main_camera))) {
            throw Error(ErrorCode::InvalidArgument, "band-pass filter passes the pump");
        }
    }

    void place_crystal() {
        const Component& crystal = role(Kind::Crystal);
        place(crystal);
        SweepResult sw = crystal_sweep(std::move(st_.ws), st_.main_camera, cfg_.sweep_min_deg, cfg_.sweep_max_deg,
                                       cfg_.sweep_step_deg);
        st_.ws = std::move(sw.ws);
        for (const auto& [theta, intensity] : sw.profile) log("sweep.sample", {{"theta", theta}, {"I", intensity}});
        log("sweep.best", {{"theta", sw.best_theta}});

        // The cavity loss separates by mirror, so each mount is tuned in its own 2-D search.
        for (const auto& mirror : {role(Kind::MirrorIC).id, role(Kind::MirrorOC).id}) {
            const std::vector<std::string> ids{mirror};
            auto knobs = knobs_of(ids);
            AngularOptConfig mcfg = cfg_.mode;
            mcfg.seed = st_.ws.rng_seed * 31 + st_.ws.action_count;
            ModeResult mr = optimize_mode(std::move(st_.ws), knobs, st_.main_camera, ModeObjective::SqrtIOverM2, mcfg);
            st_.ws = std::move(mr.ws);
            log_trace("mode." + mirror, mr.trace);
            log("mode.best", {{"I", mr.best.intensity}, {"M2", mr.best.m_squared}, {"objective", mr.best.objective}},
                mirror);
        }
    }

    void verify_lasing() {
        const double pmax = st_.ws.first_of(Kind::PumpSource)->params.power;
        std::vector<double> powers;
        const int n = std::max(cfg_.power_points, 2);
        for (int i = 0; i < n; ++i) powers.push_back(pmax * i / (n - 1));
        PowerCurve pc = measure_power_curve(st_.ws, powers);
        for (const auto& [p, out] : pc.points) log("power.sample", {{"pump", p}, {"output", out}});
        log("power.fit", {{"threshold", pc.threshold}, {"slope", pc.slope}});
        if (!(pmax > pc.threshold)) throw Error(ErrorCode::NoLasing, "operating power is below the fitted threshold");
        Baseline b = measure_baseline(st_.ws, st_.main_camera);
        if (!(b.i_over_m2 > 0.0)) throw Error(ErrorCode::NoLasing, "no laser on the main camera");
        st_.baseline = b;
        log("baseline", {{"I_over_M2", b.i_over_m2},
                         {"sqrtI_over_M2", b.sqrt_i_over_m2},
                         {"M2", b.m_squared},
                         {"mode_order", b.mode_order},
                         {"power", b.output_power},
                         {"px", b.centroid.px},
                         {"py", b.centroid.py}});
        st_.ws = take_snapshot(std::move(st_.ws));
    }

    const Layout& layout_;
    const PipelineConfig& cfg_;
    const StepCallback& cb_;
    PipelineState st_;
    StepId current_ = StepId::None;
};

bool laser_detected(const PipelineState& s) {
    return measure_mode(s.ws, s.main_camera, ModeObjective::IOverM2).detected;
}

double ratio_now(const PipelineState& s) {
    ModeMeasurement m = measure_mode(s.ws, s.main_camera, ModeObjective::IOverM2);
    return s.baseline && s.baseline->i_over_m2 > 0.0 ? m.objective / s.baseline->i_over_m2 : 0.0;
}

void require_complete(const PipelineState& s) {
    if (s.current_step != StepId::LasingVerified || !s.baseline) {
        throw Error(ErrorCode::NoSnapshot, "construction has not completed");
    }
}

}  // namespace

PipelineState run_construction(const Layout& layout, std::uint64_t seed, const PipelineConfig& cfg,
                               const StepCallback& on_step) {
    Builder b(layout, seed, cfg, on_step);
    return b.run();
}

SurveillanceResult surveillance_tick(const PipelineState& state, double tolerance_mm) {
    require_complete(state);
    SurveillanceResult r;
    r.displaced = detect_displacement(state.ws, tolerance_mm);
    if (!r.displaced.empty()) {
        r.kind = Surveillance::Displacement;
    } else if (!laser_detected(state)) {
        r.kind = Surveillance::SignalLost;
    }
    return r;
}

RecoveryReport recover_displacement(PipelineState& state, int max_attempts, double tolerance_mm) {
    require_complete(state);
    if (max_attempts < 0) throw Error(ErrorCode::InvalidArgument, "max_attempts must be >= 0");
    RecoveryReport rep;
    rep.scenario = "displacement";
    const std::uint64_t start = state.ws.action_count;
    auto displaced = detect_displacement(state.ws, tolerance_mm);
    for (const auto& d : displaced) rep.components.push_back(d.id);

    auto reposition = [&] {
        for (const auto& id : rep.components) {
            state.ws = move_component(std::move(state.ws), id, state.ws.snapshot->at(id));
        }
        ++rep.placements;
    };
    reposition();
    while (!laser_detected(state) && rep.realign_attempts < max_attempts) {
        ++rep.realign_attempts;
        reposition();
    }
    rep.success = laser_detected(state);
    rep.actions = state.ws.action_count - start;
    rep.ratio = ratio_now(state);
    rep.best_ratio = rep.ratio;
    CavityState cav = cavity_response(state.ws);
    rep.mode_order = cav.lasing ? cav.mode_order : -1;
    return rep;
}

RecoveryReport recover_drift(PipelineState& state, const DriftConfig& cfg) {
    require_complete(state);
    RecoveryReport rep;
    rep.scenario = "drift";
    const std::uint64_t start = state.ws.action_count;
    const double base = state.baseline->i_over_m2;
    std::vector<std::string> mirrors;
    for (const auto& c : state.ws.components) {
        if (c.kind == Kind::MirrorIC) mirrors.insert(mirrors.begin(), c.id);
        if (c.kind == Kind::MirrorOC) mirrors.push_back(c.id);
    }
    rep.components = mirrors;
    auto knobs = knobs_of(mirrors);
    AngularOptConfig bo = cfg.bo;
    bo.seed = state.ws.rng_seed * 131 + state.ws.action_count;
    ModeResult mr = optimize_mode(std::move(state.ws), knobs, state.main_camera, ModeObjective::IOverM2, bo,
                                  cfg.threshold * base);
    state.ws = std::move(mr.ws);
    rep.iterations = mr.trace.iters_used;
    double best = 0.0;
    for (const auto& it : mr.trace.iterations) best = std::max(best, -it.objective);
    rep.best_ratio = best / base;
    rep.ratio = mr.best.objective / base;
    rep.success = mr.best.detected && rep.ratio >= cfg.threshold;
    rep.actions = state.ws.action_count - start;
    CavityState cav = cavity_response(state.ws);
    rep.mode_order = cav.lasing ? cav.mode_order : -1;
    rep.trace = std::move(mr.trace);
    return rep;
}

RecoveryReport recover(PipelineState& state, int max_attempts, const DriftConfig& drift) {
    SurveillanceResult s = surveillance_tick(state);
    switch (s.kind) {
        case Surveillance::Displacement: return recover_displacement(state, max_attempts);
        case Surveillance::SignalLost: return recover_drift(state, drift);
        case Surveillance::Ok: break;
    }
    RecoveryReport rep;
    rep.scenario = "none";
    rep.success = true;
    rep.ratio = ratio_now(state);
    rep.best_ratio = rep.ratio;
    CavityState cav = cavity_response(state.ws);
    rep.mode_order = cav.lasing ? cav.mode_order : -1;
    return rep;
}

}  // namespace cavforge
