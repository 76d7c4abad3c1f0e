#pragma once

#include <optional>

#include "cavforge/frame.hpp"
#include "cavforge/workspace.hpp"

namespace cavforge::vision {

struct PixelPoint {
    double px = 0.0;
    double py = 0.0;
};

struct SensorOffset {
    double u_mm = 0.0;
    double v_mm = 0.0;
};

struct VisionConfig {
    double noise_floor = 0.02;
    double detection_factor = 50.0;  // detect when above-floor total >= factor * floor

    double detection_threshold() const { return detection_factor * noise_floor; }
};

struct BeamStats {
    PixelPoint centroid;
    double total_intensity = 0.0;  // sum of above-floor pixel values
    double sigma_x = 0.0;          // second-moment widths, pixels
    double sigma_y = 0.0;
    double m_squared = 1.0;
    bool detected = false;
};

/// Maps normalized intensity through log(1 + g I) / log(1 + g).
CameraFrame log_transform(const CameraFrame& frame, double gain = 10.0);

/// Pixelwise max(live - reference, 0).
CameraFrame subtract_reference(const CameraFrame& live, const CameraFrame& reference);

/// Intensity-weighted mean over above-floor pixels.
std::optional<PixelPoint> centroid(const CameraFrame& frame, const VisionConfig& cfg = {});

/// Centroid, above-floor total, second moments and an M^2 proxy.
///
/// Second moments are taken over the whole frame about the centroid. The M^2
/// proxy is (sigma / ref_sigma_px)^2 per axis, reporting the larger axis, where
/// ref_sigma_px is the fundamental mode's second-moment width at this camera
/// (w / 2 for a Gaussian of 1/e^2 radius w).
BeamStats beam_stats(const CameraFrame& frame, double ref_sigma_px, const VisionConfig& cfg = {});

/// Sensor-plane offsets. Pixel (width/2, height/2) is the optical center.
double pixels_to_mm(double pixels, double pixel_pitch_mm);
double mm_to_pixels(double mm, double pixel_pitch_mm);
PixelPoint mm_to_pixel_point(double u_mm, double v_mm, const CameraSpec& spec);
SensorOffset pixel_point_to_mm(const PixelPoint& p, const CameraSpec& spec);

}  // namespace cavforge::vision
