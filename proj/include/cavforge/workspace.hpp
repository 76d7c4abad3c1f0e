#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cavforge/error.hpp"

namespace cavforge {

/// In-plane pose on the optical table. x runs along the nominal beam axis,
/// y is transverse in the table plane, z is height. Units are mm and degrees.
struct Pose {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double yaw = 0.0;

    friend bool operator==(const Pose&, const Pose&) = default;
};

/// Wraps an angle into (-180, 180].
double normalize_yaw(double deg);

enum class Kind {
    PumpSource,
    MirrorIC,
    MirrorOC,
    Lens,
    BeamSplitter,
    NDF,
    BPF,
    BeamBlock,
    Crystal,
    Camera,
};

std::string_view to_string(Kind kind);
std::optional<Kind> kind_from_string(std::string_view name);

enum class KnobAxis { H, V };

/// Two-knob kinematic mount. Readings are cumulative knob rotation in degrees.
struct KnobPair {
    double knob_h = 0.0;
    double knob_v = 0.0;
    double tilt_per_turn = 0.5;  // degrees of mirror tilt per 360 deg knob turn
    double backlash_deg = 0.0;   // dead band on direction reversal

    // Effective (post-backlash) rotation, which is what drives the tilt.
    double effective_h = 0.0;
    double effective_v = 0.0;
    int last_dir_h = 0;
    int last_dir_v = 0;

    double tilt_h_deg() const { return effective_h / 360.0 * tilt_per_turn; }
    double tilt_v_deg() const { return effective_v / 360.0 * tilt_per_turn; }

    friend bool operator==(const KnobPair&, const KnobPair&) = default;
};

enum class CameraPort { Main, BeamSplitter };

struct CameraSpec {
    int width = 640;
    int height = 480;
    double pixel_pitch_mm = 0.01;
    double sensitivity = 1.0;  // peak value per unit power per (2 / pi w^2) mm^-2
    CameraPort port = CameraPort::Main;
    double arm_mm = 150.0;     // side-arm length for the beam-splitter port

    friend bool operator==(const CameraSpec&, const CameraSpec&) = default;
};

/// Kind-specific scalars. Only the fields relevant to a component's kind are
/// meaningful; validate_component() checks those.
struct ComponentParams {
    // PumpSource
    double power = 3.0;
    double waist_mm = 0.3;
    double tilt_deg = 0.0;    // in-plane propagation angle
    double tilt_v_deg = 0.0;  // out-of-plane propagation angle
    // Lens, and the transmissive curvature of a mirror substrate (0 = flat)
    double focal_mm = 0.0;
    // NDF
    double transmittance = 1.0;
    // BeamSplitter: reflected fraction
    double split_ratio = 0.5;
    // Mirrors (pump wavelength)
    double pump_transmittance = 1.0;
    double mount_tilt_v_deg = 0.0;
    // Crystal
    double theta_deg = 0.0;
    // Camera
    CameraSpec camera;

    friend bool operator==(const ComponentParams&, const ComponentParams&) = default;
};

struct Component {
    std::string id;
    Kind kind = Kind::Lens;
    Pose pose;
    std::optional<KnobPair> knobs;
    ComponentParams params;
    double housing_offset = 0.0;

    bool is_mirror() const { return kind == Kind::MirrorIC || kind == Kind::MirrorOC; }
    /// Absolute in-plane / out-of-plane mirror tilt in degrees.
    double tilt_h_deg() const;
    double tilt_v_deg() const;

    friend bool operator==(const Component&, const Component&) = default;
};

/// Phenomenological constants for beam propagation and the gain model.
struct PhysicsConfig {
    double pump_wavelength_mm = 1.0e-4;  // effective; sets pump divergence
    double laser_waist_mm = 0.25;        // fundamental laser-mode radius at cameras
    double secondary_fraction = 0.5;     // secondary-to-primary power ratio
    double threshold_power = 1.0;        // P_th0
    double threshold_kappa = 0.5;
    double slope_efficiency = 0.3;
    double crystal_theta_opt_deg = 1.3;
    double tilt_unit_deg = 0.02;
    double lens_unit_mm = 0.3;
    double crystal_unit_deg = 0.2;
    std::vector<double> mode_band_edges{0.6, 1.0, 1.4};
    double misalignment_cutoff = 1.8;

    friend bool operator==(const PhysicsConfig&, const PhysicsConfig&) = default;
};

struct TableBounds {
    double x_min = -100.0;
    double x_max = 1500.0;
    double y_min = -300.0;
    double y_max = 300.0;

    friend bool operator==(const TableBounds&, const TableBounds&) = default;
};

/// The simulated optical table. A value type: every operation takes a
/// workspace and returns the updated one.
struct Workspace {
    std::vector<Component> components;  // ordered by pose.x
    std::uint64_t rng_seed = 0;
    double placement_noise_sigma = 0.1;  // mm, isotropic on (x, y)
    double tilt_noise_sigma_deg = 0.0;   // mirror mount angle error per placement
    TableBounds bounds;
    PhysicsConfig physics;
    std::optional<std::map<std::string, Pose>> snapshot;
    std::mt19937_64 rng{0};
    std::uint64_t action_count = 0;

    static Workspace create(std::uint64_t seed, double placement_noise_sigma = 0.1);

    const Component* find(std::string_view id) const;
    Component* find(std::string_view id);
    const Component& get(std::string_view id) const;
    const Component* first_of(Kind kind) const;
    bool contains(std::string_view id) const { return find(id) != nullptr; }

    friend bool operator==(const Workspace&, const Workspace&) = default;
};

void validate_component(const Component& comp);

Workspace place_component(Workspace ws, Component comp, const Pose& target);
Workspace move_component(Workspace ws, std::string_view id, const Pose& target);
Workspace remove_component(Workspace ws, std::string_view id);
Workspace turn_knob(Workspace ws, std::string_view id, KnobAxis which, double delta_deg);
/// Sets a knob reading to an absolute value by turning it the difference.
Workspace set_knob(Workspace ws, std::string_view id, KnobAxis which, double reading_deg);
Workspace inject_displacement(Workspace ws, std::string_view id, const Pose& offset);
Workspace randomize_knobs(Workspace ws, std::span<const std::string> ids,
                          double min_deg = 30.0, double max_deg = 60.0);
Workspace set_crystal_angle(Workspace ws, std::string_view id, double theta_deg);

Workspace take_snapshot(Workspace ws);

struct Displacement {
    std::string id;
    double distance_mm = 0.0;
};
std::vector<Displacement> detect_displacement(const Workspace& ws, double tolerance_mm);

}  // namespace cavforge
