#pragma once

// Shared generators for the unit and acceptance suites. Everything is
// driven by xq::Rng so failures replay from a seed.

#include <cmath>
#include <vector>

#include "xq/core.hpp"

namespace xq::test {

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + rng.next_double() * (hi - lo);
}

inline double gaussian(Rng& rng) {
    // Box-Muller; consumes two draws.
    double u1 = rng.next_double();
    double u2 = rng.next_double();
    if (u1 < 1e-300) {
        u1 = 1e-300;
    }
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

inline std::vector<double> random_vec(Rng& rng, int dim, double lo = -1.0,
                                      double hi = 1.0) {
    std::vector<double> v(dim);
    for (double& x : v) {
        x = uniform(rng, lo, hi);
    }
    return v;
}

inline FeatureGrid random_grid(Rng& rng, int h, int w, int d,
                               double lo = -1.0, double hi = 1.0) {
    std::vector<double> data(static_cast<size_t>(h) * w * d);
    for (double& x : data) {
        x = uniform(rng, lo, hi);
    }
    return {h, w, d, std::move(data)};
}

inline Codebook random_codebook(Rng& rng, int size, int dim,
                                double lo = -1.0, double hi = 1.0) {
    std::vector<double> entries(static_cast<size_t>(size) * dim);
    for (double& x : entries) {
        x = uniform(rng, lo, hi);
    }
    return {size, dim, std::move(entries)};
}

/// Random codebook whose entry 0 is the zero vector.
inline Codebook zero_augmented_codebook(Rng& rng, int size, int dim) {
    Codebook cb = random_codebook(rng, size, dim);
    auto e0 = cb.entry(0);
    for (double& x : e0) {
        x = 0.0;
    }
    return cb;
}

inline bool bitwise_equal(const FeatureGrid& a, const FeatureGrid& b) {
    if (!a.same_shape(b)) {
        return false;
    }
    for (size_t i = 0; i < a.data().size(); ++i) {
        if (a.data()[i] != b.data()[i]) {
            return false;
        }
    }
    return true;
}

}  // namespace xq::test
