#pragma once

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cavforge/frame.hpp"
#include "cavforge/workspace.hpp"

namespace cavforge {

enum class Wavelength { Pump, Laser };

struct BeamSegment {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double dir_x = 1.0;
    double dir_y = 0.0;
    double length = 0.0;
    double waist_w = 0.0;  // 1/e^2 radius at the end of the segment
    double power = 0.0;
    Wavelength tag = Wavelength::Pump;
};

/// A beam arriving at a camera, in sensor-plane millimetres relative to the
/// sensor center (u horizontal = table y, v vertical = height z).
struct CameraHit {
    std::string camera_id;
    double u_mm = 0.0;
    double v_mm = 0.0;
    double waist_mm = 0.0;
    double power = 0.0;
    int mode_order = 0;  // Hermite-Gaussian order (n, 0) along u
    Wavelength tag = Wavelength::Pump;
};

struct TraceResult {
    std::vector<BeamSegment> segments;
    std::vector<CameraHit> hits;

    const CameraHit* hit_on(std::string_view camera_id) const;
};

/// Paraxial ray plus Gaussian q-parameter, in table coordinates.
struct Ray {
    double x = 0.0;
    double y = 0.0;
    double ty = 0.0;  // dy/dx, radians
    double z = 0.0;
    double tz = 0.0;
    std::complex<double> q{0.0, 1.0};
    double power = 0.0;
    double wavelength_mm = 1.0e-4;
    Wavelength tag = Wavelength::Pump;

    double waist() const;
};

/// Sequential 2-D trace of the pump in beam-path order.
TraceResult trace_beam(const Workspace& ws);

/// Pump ray state arriving at (just before) the component `id`, or nothing if
/// the beam is blocked earlier.
std::optional<Ray> ray_before(const Workspace& ws, std::string_view id);

/// The internally reflected beam between the resonator mirrors as seen by a
/// camera. Uses the IC/OC round trip when the IC is in place, otherwise the
/// OC retro-reflection picked off by the beam splitter.
std::optional<CameraHit> secondary_beam(const Workspace& ws, std::string_view camera_id);

struct CavityState {
    bool lasing = false;
    int mode_order = 0;
    double output_power = 0.0;
    double misalignment_metric = 0.0;
    double threshold_power = 0.0;
};

CavityState cavity_response(const Workspace& ws, double pump_power);
CavityState cavity_response(const Workspace& ws);  // at the source's configured power

/// Every beam the camera currently sees: primary pump, secondary, laser.
std::vector<CameraHit> observe(const Workspace& ws, std::string_view camera_id);

CameraFrame render_frame(std::span<const CameraHit> hits, const Component& camera);
CameraFrame capture(const Workspace& ws, std::string_view camera_id);

/// Gaussian radius of the primary beam at a camera (laser radius if lasing
/// light is all the camera sees).
double beam_waist_at(const Workspace& ws, std::string_view camera_id);

}  // namespace cavforge
