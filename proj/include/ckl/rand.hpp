// Portable draws on top of the standard-pinned mt19937_64 stream.
// std::shuffle and std::*_distribution sequences are implementation-defined,
// which would break byte-identical reports across toolchains.
#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ckl {

inline double next_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline int next_poisson(std::mt19937_64& rng, double mean) {
    if (mean <= 0.0) return 0;
    double limit = std::exp(-mean), prod = next_uniform(rng);
    int k = 0;
    while (prod > limit) {
        prod *= next_uniform(rng);
        ++k;
    }
    return k;
}

template <typename T>
void portable_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(next_uniform(rng) * static_cast<double>(i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace ckl
