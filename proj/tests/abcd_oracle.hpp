#pragma once

#include <array>
#include <complex>
#include <numbers>
#include <vector>

namespace cavforge::test {

// Augmented paraxial transfer matrix acting on (y, theta, 1).
using Mat3 = std::array<std::array<double, 3>, 3>;

inline Mat3 identity3() { return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}; }

inline Mat3 mul(const Mat3& a, const Mat3& b) {
    Mat3 c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
    return c;
}

inline Mat3 drift(double d) { return {{{1, d, 0}, {0, 1, 0}, {0, 0, 1}}}; }

// Thin lens of focal length f whose axis sits at transverse offset c.
inline Mat3 decentered_lens(double f, double c) { return {{{1, 0, 0}, {-1.0 / f, 1, c / f}, {0, 0, 1}}}; }

struct Element {
    double x;
    double f;
    double c;
};

struct OracleHit {
    double y;
    double waist;
};

/// Independent propagation of a ray (y0, theta0) and a Gaussian waist w0 from
/// x = 0 through thin lenses to x_end.
inline OracleHit abcd_propagate(double y0, double theta0, double w0, double wavelength,
                                const std::vector<Element>& lenses, double x_end) {
    Mat3 m = identity3();
    double x = 0.0;
    for (const auto& e : lenses) {
        m = mul(drift(e.x - x), m);
        m = mul(decentered_lens(e.f, e.c), m);
        x = e.x;
    }
    m = mul(drift(x_end - x), m);
    const double y = m[0][0] * y0 + m[0][1] * theta0 + m[0][2];
    std::complex<double> q0{0.0, std::numbers::pi * w0 * w0 / wavelength};
    std::complex<double> q = (m[0][0] * q0 + m[0][1]) / (m[1][0] * q0 + m[1][1]);
    const double w = std::sqrt(-wavelength / (std::numbers::pi * (1.0 / q).imag()));
    return {y, w};
}

}  // namespace cavforge::test
