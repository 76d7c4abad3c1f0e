#include "cavforge/vision.hpp"

#include <algorithm>
#include <cmath>

#include "cavforge/error.hpp"

namespace cavforge::vision {

CameraFrame log_transform(const CameraFrame& frame, double gain) {
    if (!(gain > 0.0)) throw Error(ErrorCode::InvalidArgument, "log transform gain must be > 0");
    CameraFrame out = frame;
    const double denom = std::log1p(gain);
    for (double& v : out.intensities) v = std::log1p(gain * v) / denom;
    return out;
}

CameraFrame subtract_reference(const CameraFrame& live, const CameraFrame& reference) {
    if (!live.same_shape(reference)) {
        throw Error(ErrorCode::DimensionMismatch, "live and reference frames differ in size");
    }
    CameraFrame out = live;
    for (std::size_t i = 0; i < out.intensities.size(); ++i) {
        out.intensities[i] = std::max(live.intensities[i] - reference.intensities[i], 0.0);
    }
    return out;
}

std::optional<PixelPoint> centroid(const CameraFrame& frame, const VisionConfig& cfg) {
    double sum = 0.0, sx = 0.0, sy = 0.0;
    for (int py = 0; py < frame.height; ++py) {
        for (int px = 0; px < frame.width; ++px) {
            double v = frame.at(px, py);
            if (v <= cfg.noise_floor) continue;
            sum += v;
            sx += v * px;
            sy += v * py;
        }
    }
    if (sum <= 0.0 || sum < cfg.detection_threshold()) return std::nullopt;
    return PixelPoint{sx / sum, sy / sum};
}

BeamStats beam_stats(const CameraFrame& frame, double ref_sigma_px, const VisionConfig& cfg) {
    BeamStats st;
    auto c = centroid(frame, cfg);
    if (!c) return st;
    st.detected = true;
    st.centroid = *c;
    double total = 0.0, all = 0.0, mx = 0.0, my = 0.0;
    for (int py = 0; py < frame.height; ++py) {
        for (int px = 0; px < frame.width; ++px) {
            double v = frame.at(px, py);
            if (v > cfg.noise_floor) total += v;
            all += v;
            mx += v * px;
            my += v * py;
        }
    }
    mx /= all;
    my /= all;
    double vx = 0.0, vy = 0.0;
    for (int py = 0; py < frame.height; ++py) {
        for (int px = 0; px < frame.width; ++px) {
            double v = frame.at(px, py);
            vx += v * (px - mx) * (px - mx);
            vy += v * (py - my) * (py - my);
        }
    }
    st.total_intensity = total;
    st.sigma_x = std::sqrt(vx / all);
    st.sigma_y = std::sqrt(vy / all);
    if (ref_sigma_px > 0.0) {
        double m2x = (st.sigma_x / ref_sigma_px) * (st.sigma_x / ref_sigma_px);
        double m2y = (st.sigma_y / ref_sigma_px) * (st.sigma_y / ref_sigma_px);
        st.m_squared = std::max({1.0, m2x, m2y});
    }
    return st;
}

double pixels_to_mm(double pixels, double pixel_pitch_mm) { return pixels * pixel_pitch_mm; }

double mm_to_pixels(double mm, double pixel_pitch_mm) { return mm / pixel_pitch_mm; }

PixelPoint mm_to_pixel_point(double u_mm, double v_mm, const CameraSpec& spec) {
    return {spec.width / 2.0 + mm_to_pixels(u_mm, spec.pixel_pitch_mm),
            spec.height / 2.0 + mm_to_pixels(v_mm, spec.pixel_pitch_mm)};
}

SensorOffset pixel_point_to_mm(const PixelPoint& p, const CameraSpec& spec) {
    return {pixels_to_mm(p.px - spec.width / 2.0, spec.pixel_pitch_mm),
            pixels_to_mm(p.py - spec.height / 2.0, spec.pixel_pitch_mm)};
}

}  // namespace cavforge::vision
