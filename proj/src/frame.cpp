#include "cavforge/frame.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cavforge/error.hpp"

namespace cavforge {

double CameraFrame::peak() const {
    return intensities.empty() ? 0.0 : *std::max_element(intensities.begin(), intensities.end());
}

std::size_t CameraFrame::saturated_pixels() const {
    return static_cast<std::size_t>(
        std::count_if(intensities.begin(), intensities.end(), [](double v) { return v >= 1.0; }));
}

std::string to_pgm_bytes(const CameraFrame& frame) {
    std::string out = "P5\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) + "\n255\n";
    out.reserve(out.size() + frame.intensities.size());
    for (double v : frame.intensities) {
        double c = std::clamp(v, 0.0, 1.0);
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
    }
    return out;
}

void write_pgm(const CameraFrame& frame, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string() + " for writing");
    f << to_pgm_bytes(frame);
}

CameraFrame read_pgm(const std::filesystem::path& path, double pixel_pitch_mm) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::Parse, "cannot open " + path.string());
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    f >> magic >> w >> h >> maxval;
    if (magic != "P5" || w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
        throw Error(ErrorCode::Parse, path.string() + " is not an 8-bit binary PGM");
    }
    f.get();
    CameraFrame frame(w, h, pixel_pitch_mm);
    std::string buf(static_cast<std::size_t>(w) * h, '\0');
    if (!f.read(buf.data(), static_cast<std::streamsize>(buf.size()))) {
        throw Error(ErrorCode::Parse, path.string() + " is truncated");
    }
    for (std::size_t i = 0; i < buf.size(); ++i) {
        frame.intensities[i] = static_cast<unsigned char>(buf[i]) / static_cast<double>(maxval);
    }
    return frame;
}

void write_csv(const CameraFrame& frame, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string() + " for writing");
    f.precision(6);
    for (int py = 0; py < frame.height; ++py) {
        for (int px = 0; px < frame.width; ++px) {
            if (px) f << ',';
            f << frame.at(px, py);
        }
        f << '\n';
    }
}

}  // namespace cavforge
