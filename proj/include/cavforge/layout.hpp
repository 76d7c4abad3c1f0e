#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cavforge/workspace.hpp"

namespace cavforge {

/// A user-supplied experimental layout: global settings plus every component
/// with its nominal pose. Nominal y is relative to the measured pump line.
struct Layout {
    int version = 1;
    std::uint64_t seed = 0;
    double placement_noise_sigma_mm = 0.1;
    double tilt_noise_sigma_deg = 0.03;
    double tilt_per_turn_deg = 0.5;
    double backlash_deg = 0.0;
    PhysicsConfig physics;
    std::vector<Component> components;  // pose holds the nominal pose

    const Component* find(std::string_view id) const;
    const Component* first_of(Kind kind) const;
};

/// Parses and validates layout JSON. Unknown fields are rejected. Throws
/// Error(Parse) on malformed input and Error(InvalidArgument) on bad values.
Layout parse_layout(std::string_view json_text);
Layout load_layout(const std::filesystem::path& path);
std::string layout_to_json(const Layout& layout);

/// The built-in ten-component layout.
Layout default_layout();
std::string default_layout_json();

/// Applies `key=value` overrides to layout JSON text before parsing.
/// Keys: top-level fields ("seed"), "physics.<field>", or "<component id>.<param>".
std::string apply_overrides(std::string_view json_text, const std::vector<std::string>& overrides);

}  // namespace cavforge
