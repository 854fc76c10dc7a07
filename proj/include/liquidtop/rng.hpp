#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>

namespace liquidtop {

// Deterministic draw helpers on top of mt19937_64.  The standard library
// distributions are implementation-defined, so reports that must be
// byte-identical across toolchains draw through these instead.

inline double uniform01(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& g, double lo, double hi) {
    return lo + (hi - lo) * uniform01(g);
}

inline double gaussian(std::mt19937_64& g) {
    // Box-Muller; one value per call keeps the stream position simple.
    double u1 = uniform01(g), u2 = uniform01(g);
    while (u1 <= 0.0) u1 = uniform01(g);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

inline Eigen::VectorXd gaussian_vector(std::mt19937_64& g, int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = gaussian(g);
    return v;
}

inline Eigen::Vector3d random_direction(std::mt19937_64& g) {
    Eigen::Vector3d d;
    do {
        d << gaussian(g), gaussian(g), gaussian(g);
    } while (d.norm() < 1e-12);
    return d.normalized();
}

}  // namespace liquidtop
