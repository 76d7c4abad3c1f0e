#include "cavforge/beam.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cavforge {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::optional<std::size_t> index_of(const Workspace& ws, std::string_view id) {
    for (std::size_t i = 0; i < ws.components.size(); ++i) {
        if (ws.components[i].id == id) return i;
    }
    return std::nullopt;
}

void free_space(Ray& r, double to_x, TraceResult* out) {
    double dx = to_x - r.x;
    if (dx <= 0.0) return;
    if (out) {
        double norm = std::sqrt(1.0 + r.ty * r.ty);
        BeamSegment seg;
        seg.origin_x = r.x;
        seg.origin_y = r.y;
        seg.dir_x = 1.0 / norm;
        seg.dir_y = r.ty / norm;
        seg.length = dx * norm;
        seg.power = r.power;
        seg.tag = r.tag;
        r.q += dx;
        seg.waist_w = r.waist();
        r.q -= dx;
        out->segments.push_back(seg);
    }
    r.y += r.ty * dx;
    r.z += r.tz * dx;
    r.q += dx;
    r.x = to_x;
}

void thin_lens(Ray& r, double focal, double cy, double cz) {
    r.ty -= (r.y - cy) / focal;
    r.tz -= (r.z - cz) / focal;
    r.q = r.q / (1.0 - r.q / focal);
}

bool is_side_port_camera(const Component& c) {
    return c.kind == Kind::Camera && c.params.camera.port == CameraPort::BeamSplitter;
}

CameraHit side_port_hit(const Ray& r, const Component& bs, const Component& cam) {
    const double arm = cam.params.camera.arm_mm;
    Ray b = r;
    b.q += arm;
    CameraHit hit;
    hit.camera_id = cam.id;
    hit.u_mm = (r.y - bs.pose.y) + r.ty * arm - cam.pose.y;
    hit.v_mm = r.z + r.tz * arm - cam.pose.z;
    hit.waist_mm = b.waist();
    hit.power = r.power * bs.params.split_ratio;
    hit.tag = r.tag;
    return hit;
}

// Pushes `r` through components[first..]. Records segments and camera hits
// into `out` when given. Returns the ray just before `stop_before` if that
// component is reached unobstructed.
std::optional<Ray> propagate(const Workspace& ws, Ray r, std::size_t first, TraceResult* out,
                             std::string_view stop_before = {}) {
    for (std::size_t i = first; i < ws.components.size(); ++i) {
        const Component& c = ws.components[i];
        if (c.kind == Kind::PumpSource || is_side_port_camera(c)) continue;
        if (c.pose.x < r.x) continue;
        free_space(r, c.pose.x, out);
        if (!stop_before.empty() && c.id == stop_before) return r;
        const auto& p = c.params;
        switch (c.kind) {
            case Kind::Lens:
                thin_lens(r, p.focal_mm, c.pose.y, c.pose.z);
                break;
            case Kind::MirrorIC:
            case Kind::MirrorOC:
                if (r.tag == Wavelength::Pump) r.power *= p.pump_transmittance;
                if (p.focal_mm != 0.0) thin_lens(r, p.focal_mm, c.pose.y, c.pose.z);
                break;
            case Kind::BeamSplitter:
                if (out) {
                    for (const auto& cam : ws.components) {
                        if (is_side_port_camera(cam)) out->hits.push_back(side_port_hit(r, c, cam));
                    }
                }
                r.power *= 1.0 - p.split_ratio;
                break;
            case Kind::NDF:
                r.power *= p.transmittance;
                break;
            case Kind::BPF:
                if (r.tag == Wavelength::Pump) return std::nullopt;
                break;
            case Kind::BeamBlock:
                return std::nullopt;
            case Kind::Camera: {
                if (out) {
                    CameraHit hit;
                    hit.camera_id = c.id;
                    hit.u_mm = r.y - c.pose.y;
                    hit.v_mm = r.z - c.pose.z;
                    hit.waist_mm = r.waist();
                    hit.power = r.power;
                    hit.tag = r.tag;
                    out->hits.push_back(hit);
                }
                return std::nullopt;
            }
            case Kind::Crystal:
            case Kind::PumpSource:
                break;
        }
    }
    if (out && r.x < ws.bounds.x_max) free_space(r, ws.bounds.x_max, out);
    return std::nullopt;
}

const Component& require_pump(const Workspace& ws) {
    const Component* pump = ws.first_of(Kind::PumpSource);
    if (!pump) throw Error(ErrorCode::MissingComponent, "workspace has no pump source");
    return *pump;
}

Ray source_ray(const Workspace& ws, const Component& pump) {
    const auto& p = pump.params;
    if (!std::isfinite(pump.pose.x) || !std::isfinite(pump.pose.y) || !std::isfinite(p.tilt_deg)) {
        throw Error(ErrorCode::NonFinite, "pump geometry is not finite");
    }
    Ray r;
    r.x = pump.pose.x;
    r.y = pump.pose.y;
    r.z = pump.pose.z;
    r.ty = p.tilt_deg * kDegToRad;
    r.tz = p.tilt_v_deg * kDegToRad;
    r.wavelength_mm = ws.physics.pump_wavelength_mm;
    double rayleigh = std::numbers::pi * p.waist_mm * p.waist_mm / r.wavelength_mm;
    r.q = {0.0, rayleigh};
    r.power = p.power;
    r.tag = Wavelength::Pump;
    return r;
}

bool blocked_between(const Workspace& ws, double x0, double x1) {
    return std::any_of(ws.components.begin(), ws.components.end(), [&](const Component& c) {
        return c.kind == Kind::BeamBlock && c.pose.x > x0 && c.pose.x < x1;
    });
}

std::optional<CameraHit> hit_from(const Workspace& ws, const Ray& start, std::size_t first,
                                  std::string_view camera_id) {
    TraceResult tr;
    propagate(ws, start, first, &tr);
    if (const CameraHit* h = tr.hit_on(camera_id)) return *h;
    return std::nullopt;
}

struct MirrorErrors {
    double ic_h = 0.0, ic_v = 0.0, oc_h = 0.0, oc_v = 0.0;  // degrees
};

struct Direction {
    double h_deg = 0.0;
    double v_deg = 0.0;
};

// Pump direction inside the resonator, after any upstream lens deflection.
Direction pump_axis(const Workspace& ws, const Component& pump, const Component& oc) {
    if (auto r = propagate(ws, source_ray(ws, pump), 0, nullptr, oc.id)) {
        return {std::atan(r->ty) / kDegToRad, std::atan(r->tz) / kDegToRad};
    }
    return {pump.params.tilt_deg, pump.params.tilt_v_deg};
}

MirrorErrors mirror_errors(const Direction& axis, const Component& ic, const Component& oc) {
    return {ic.tilt_h_deg() - axis.h_deg, ic.tilt_v_deg() - axis.v_deg,
            oc.tilt_h_deg() - axis.h_deg, oc.tilt_v_deg() - axis.v_deg};
}

}  // namespace

double Ray::waist() const {
    std::complex<double> inv = 1.0 / q;
    return std::sqrt(-wavelength_mm / (std::numbers::pi * inv.imag()));
}

const CameraHit* TraceResult::hit_on(std::string_view camera_id) const {
    for (const auto& h : hits) {
        if (h.camera_id == camera_id) return &h;
    }
    return nullptr;
}

TraceResult trace_beam(const Workspace& ws) {
    const Component& pump = require_pump(ws);
    TraceResult out;
    propagate(ws, source_ray(ws, pump), 0, &out);
    return out;
}

std::optional<Ray> ray_before(const Workspace& ws, std::string_view id) {
    const Component& pump = require_pump(ws);
    ws.get(id);
    return propagate(ws, source_ray(ws, pump), 0, nullptr, id);
}

std::optional<CameraHit> secondary_beam(const Workspace& ws, std::string_view camera_id) {
    const Component* oc = ws.first_of(Kind::MirrorOC);
    if (!oc) throw Error(ErrorCode::MissingComponent, "secondary beam needs an out-coupler");
    const Component* ic = ws.first_of(Kind::MirrorIC);
    const Component* bs = ws.first_of(Kind::BeamSplitter);
    if (!ic && !bs) throw Error(ErrorCode::MissingComponent, "secondary beam needs an in-coupler or beam splitter");
    const Component& cam = ws.get(camera_id);
    if (cam.kind != Kind::Camera) throw Error(ErrorCode::InvalidArgument, "'" + cam.id + "' is not a camera");
    const double fraction = ws.physics.secondary_fraction;

    auto at_oc = ray_before(ws, oc->id);
    if (!at_oc) return std::nullopt;

    if (cam.params.camera.port == CameraPort::BeamSplitter) {
        // OC retro-reflection returned onto the pick-off camera; the unfolded
        // lever is the BS->OC->BS round trip plus the side arm.
        if (!bs || bs->pose.x >= oc->pose.x || blocked_between(ws, bs->pose.x, oc->pose.x)) return std::nullopt;
        TraceResult tr = trace_beam(ws);
        const CameraHit* primary = tr.hit_on(camera_id);
        if (!primary) return std::nullopt;
        double lever = (oc->pose.x - bs->pose.x) + cam.params.camera.arm_mm;
        double eo_h = oc->tilt_h_deg() * kDegToRad - at_oc->ty;
        double eo_v = oc->tilt_v_deg() * kDegToRad - at_oc->tz;
        CameraHit hit = *primary;
        hit.u_mm += 2.0 * eo_h * lever;
        hit.v_mm += 2.0 * eo_v * lever;
        hit.power *= fraction;
        return hit;
    }

    if (!ic || ic->pose.x >= oc->pose.x || cam.pose.x <= oc->pose.x) return std::nullopt;
    if (blocked_between(ws, ic->pose.x, oc->pose.x)) return std::nullopt;
    // OC -> IC -> OC round trip in the table plane (and likewise in height).
    const double d = oc->pose.x - ic->pose.x;
    auto round_trip = [d](double pos, double slope, double tilt_oc, double tilt_ic, double& out_slope) {
        double back = 2.0 * tilt_oc - slope;
        double at_ic = pos - back * d;
        out_slope = 2.0 * tilt_ic - back;
        return at_ic + out_slope * d;
    };
    Ray sec = *at_oc;
    sec.y = round_trip(at_oc->y, at_oc->ty, oc->tilt_h_deg() * kDegToRad, ic->tilt_h_deg() * kDegToRad, sec.ty);
    sec.z = round_trip(at_oc->z, at_oc->tz, oc->tilt_v_deg() * kDegToRad, ic->tilt_v_deg() * kDegToRad, sec.tz);
    sec.power *= fraction;
    auto oc_index = index_of(ws, oc->id);
    auto hit = hit_from(ws, sec, *oc_index, camera_id);
    if (hit) {
        // The secondary keeps the primary's spot size at the camera.
        TraceResult tr = trace_beam(ws);
        if (const CameraHit* primary = tr.hit_on(camera_id)) hit->waist_mm = primary->waist_mm;
    }
    return hit;
}

CavityState cavity_response(const Workspace& ws, double pump_power) {
    const Component& pump = require_pump(ws);
    const Component* ic = ws.first_of(Kind::MirrorIC);
    const Component* oc = ws.first_of(Kind::MirrorOC);
    const Component* lens = ws.first_of(Kind::Lens);
    const Component* crystal = ws.first_of(Kind::Crystal);
    if (!ic || !oc || !lens || !crystal) {
        throw Error(ErrorCode::MissingComponent, "cavity needs IC, OC, lens and crystal");
    }
    const PhysicsConfig& ph = ws.physics;
    MirrorErrors e = mirror_errors(pump_axis(ws, pump, *oc), *ic, *oc);
    double line_y = pump.pose.y + std::tan(pump.params.tilt_deg * kDegToRad) * (lens->pose.x - pump.pose.x);
    double lens_off = lens->pose.y - line_y;
    double crystal_dev = crystal->params.theta_deg - ph.crystal_theta_opt_deg;

    double t_ic = std::hypot(e.ic_h, e.ic_v) / ph.tilt_unit_deg;
    double t_oc = std::hypot(e.oc_h, e.oc_v) / ph.tilt_unit_deg;
    double t_lens = lens_off / ph.lens_unit_mm;
    double t_cry = crystal_dev / ph.crystal_unit_deg;

    CavityState st;
    st.misalignment_metric = std::sqrt((t_ic * t_ic + t_oc * t_oc + t_lens * t_lens + t_cry * t_cry) / 4.0);
    const double m = st.misalignment_metric;
    st.threshold_power = ph.threshold_power * (1.0 + ph.threshold_kappa * m * m);
    st.mode_order = static_cast<int>(
        std::count_if(ph.mode_band_edges.begin(), ph.mode_band_edges.end(), [m](double edge) { return m >= edge; }));

    bool pumped = ray_before(ws, crystal->id).has_value() && !blocked_between(ws, ic->pose.x, oc->pose.x);
    st.lasing = pumped && pump_power > st.threshold_power && m < ph.misalignment_cutoff;
    st.output_power = st.lasing ? ph.slope_efficiency * (pump_power - st.threshold_power) : 0.0;
    return st;
}

CavityState cavity_response(const Workspace& ws) {
    return cavity_response(ws, require_pump(ws).params.power);
}

std::vector<CameraHit> observe(const Workspace& ws, std::string_view camera_id) {
    const Component& cam = ws.get(camera_id);
    if (cam.kind != Kind::Camera) throw Error(ErrorCode::InvalidArgument, "'" + cam.id + "' is not a camera");
    std::vector<CameraHit> hits;
    TraceResult tr = trace_beam(ws);
    for (const auto& h : tr.hits) {
        if (h.camera_id == camera_id) hits.push_back(h);
    }
    const Component* oc = ws.first_of(Kind::MirrorOC);
    if (oc && (ws.first_of(Kind::MirrorIC) || ws.first_of(Kind::BeamSplitter))) {
        if (auto sec = secondary_beam(ws, camera_id)) hits.push_back(*sec);
    }
    const Component* ic = ws.first_of(Kind::MirrorIC);
    if (oc && ic && ws.first_of(Kind::Lens) && ws.first_of(Kind::Crystal)) {
        CavityState cav = cavity_response(ws);
        auto at_oc = ray_before(ws, oc->id);
        if (cav.lasing && at_oc) {
            const Component& pump = require_pump(ws);
            const Direction axis = pump_axis(ws, pump, *oc);
            MirrorErrors e = mirror_errors(axis, *ic, *oc);
            Ray laser = *at_oc;
            laser.tag = Wavelength::Laser;
            laser.power = cav.output_power;
            laser.ty = (axis.h_deg + 0.5 * (e.ic_h + e.oc_h)) * kDegToRad;
            laser.tz = (axis.v_deg + 0.5 * (e.ic_v + e.oc_v)) * kDegToRad;
            if (auto hit = hit_from(ws, laser, *index_of(ws, oc->id), camera_id)) {
                hit->waist_mm = ws.physics.laser_waist_mm;
                hit->mode_order = cav.mode_order;
                hits.push_back(*hit);
            }
        }
    }
    return hits;
}

CameraFrame render_frame(std::span<const CameraHit> hits, const Component& camera) {
    if (camera.kind != Kind::Camera) throw Error(ErrorCode::InvalidArgument, "'" + camera.id + "' is not a camera");
    const CameraSpec& spec = camera.params.camera;
    CameraFrame frame(spec.width, spec.height, spec.pixel_pitch_mm);
    const double cx = spec.width / 2.0;
    const double cy = spec.height / 2.0;
    for (const auto& hit : hits) {
        if (!(hit.power > 0.0) || !(hit.waist_mm > 0.0)) continue;
        const int n = hit.mode_order;
        const double w_px = hit.waist_mm / spec.pixel_pitch_mm;
        const double amp = spec.sensitivity * hit.power * 2.0 / (std::numbers::pi * hit.waist_mm * hit.waist_mm) /
                           (std::pow(2.0, n) * std::tgamma(n + 1.0));
        const double hx = cx + hit.u_mm / spec.pixel_pitch_mm;
        const double hy = cy + hit.v_mm / spec.pixel_pitch_mm;
        const double reach_x = w_px * (3.5 + 1.5 * std::sqrt(2.0 * n + 1.0));
        const double reach_y = w_px * 3.5;
        const int x0 = std::max(0, static_cast<int>(std::floor(hx - reach_x)));
        const int x1 = std::min(spec.width - 1, static_cast<int>(std::ceil(hx + reach_x)));
        const int y0 = std::max(0, static_cast<int>(std::floor(hy - reach_y)));
        const int y1 = std::min(spec.height - 1, static_cast<int>(std::ceil(hy + reach_y)));
        if (x0 > x1 || y0 > y1) continue;
        std::vector<double> col(static_cast<std::size_t>(x1 - x0 + 1));
        for (int px = x0; px <= x1; ++px) {
            double dx = (px - hx) / w_px;
            double h = n == 0 ? 1.0 : std::hermite(static_cast<unsigned>(n), std::numbers::sqrt2 * dx);
            col[static_cast<std::size_t>(px - x0)] = h * h * std::exp(-2.0 * dx * dx);
        }
        for (int py = y0; py <= y1; ++py) {
            double dy = (py - hy) / w_px;
            double row = amp * std::exp(-2.0 * dy * dy);
            for (int px = x0; px <= x1; ++px) frame.at(px, py) += row * col[static_cast<std::size_t>(px - x0)];
        }
    }
    for (double& v : frame.intensities) v = std::min(v, 1.0);
    return frame;
}

CameraFrame capture(const Workspace& ws, std::string_view camera_id) {
    auto hits = observe(ws, camera_id);
    return render_frame(hits, ws.get(camera_id));
}

double beam_waist_at(const Workspace& ws, std::string_view camera_id) {
    TraceResult tr = trace_beam(ws);
    if (const CameraHit* h = tr.hit_on(camera_id)) return h->waist_mm;
    for (const auto& h : observe(ws, camera_id)) {
        if (h.tag == Wavelength::Laser) return h.waist_mm;
    }
    throw Error(ErrorCode::BeamLost, "no beam reaches camera '" + std::string(camera_id) + "'");
}

}  // namespace cavforge
