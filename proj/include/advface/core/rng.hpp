#ifndef ADVFACE_CORE_RNG_HPP
#define ADVFACE_CORE_RNG_HPP

#include <cstdint>
#include <random>

#include "advface/core/tensor.hpp"

namespace advface::nn {

using Rng = std::mt19937_64;

template <typename S>
void fill_normal(Tensor<S>& t, Rng& rng, double stddev, double mean = 0.0) {
    std::normal_distribution<double> d(mean, stddev);
    for (long i = 0; i < t.numel(); ++i) t[i] = static_cast<S>(d(rng));
}

template <typename S>
void fill_uniform(Tensor<S>& t, Rng& rng, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    for (long i = 0; i < t.numel(); ++i) t[i] = static_cast<S>(d(rng));
}

// FNV-1a over raw bytes; used to derive per-image seeds so attacks with
// randomness stay deterministic regardless of evaluation order.
inline uint64_t fnv1a(const void* ptr, size_t nbytes, uint64_t seed = 1469598103934665603ull) {
    const auto* p = static_cast<const unsigned char*>(ptr);
    uint64_t h = seed;
    for (size_t i = 0; i < nbytes; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

template <typename S>
uint64_t content_seed(const Tensor<S>& t, uint64_t mix) {
    return fnv1a(t.data(), sizeof(S) * static_cast<size_t>(t.numel())) ^ mix;
}

}  // namespace advface::nn

#endif
