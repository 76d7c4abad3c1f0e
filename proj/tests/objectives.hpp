#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace cavforge::test {

/// Smooth 2-D test surface on [-1, 1]^2: a tilted bowl plus a gentle ripple.
struct SmoothSurface {
    double cx, cy, ax, ay, rho, ripple, phase;

    double operator()(double x, double y) const {
        const double dx = x - cx, dy = y - cy;
        return ax * dx * dx + ay * dy * dy + rho * dx * dy + ripple * std::sin(3.0 * x + 2.0 * y + phase);
    }
};

inline SmoothSurface random_surface(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> c(-0.7, 0.7), a(0.5, 2.0), r(-0.3, 0.3), p(0.0, 6.28);
    return {c(rng), c(rng), a(rng), a(rng), r(rng), 0.1, p(rng)};
}

struct GridOptimum {
    double min;
    double max;
};

/// Brute-force 101 x 101 evaluation over [-1, 1]^2.
template <class F>
GridOptimum grid_optimum(const F& f) {
    GridOptimum g{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (int i = 0; i <= 100; ++i) {
        for (int j = 0; j <= 100; ++j) {
            const double v = f(-1.0 + 0.02 * i, -1.0 + 0.02 * j);
            g.min = std::min(g.min, v);
            g.max = std::max(g.max, v);
        }
    }
    return g;
}

}  // namespace cavforge::test
