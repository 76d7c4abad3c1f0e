#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace cavforge {

/// A normalized grayscale camera image, row-major, values in [0, 1].
struct CameraFrame {
    int width = 0;
    int height = 0;
    double pixel_pitch_mm = 0.01;
    std::vector<double> intensities;

    CameraFrame() = default;
    CameraFrame(int w, int h, double pitch)
        : width(w), height(h), pixel_pitch_mm(pitch),
          intensities(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0.0) {}

    double& at(int px, int py) { return intensities[static_cast<std::size_t>(py) * width + px]; }
    double at(int px, int py) const { return intensities[static_cast<std::size_t>(py) * width + px]; }

    bool same_shape(const CameraFrame& o) const { return width == o.width && height == o.height; }
    double peak() const;
    std::size_t saturated_pixels() const;

    friend bool operator==(const CameraFrame&, const CameraFrame&) = default;
};

// Binary 8-bit PGM (P5). Values are quantized as round(255 * I).
void write_pgm(const CameraFrame& frame, const std::filesystem::path& path);
CameraFrame read_pgm(const std::filesystem::path& path, double pixel_pitch_mm = 0.01);
std::string to_pgm_bytes(const CameraFrame& frame);
void write_csv(const CameraFrame& frame, const std::filesystem::path& path);

}  // namespace cavforge
