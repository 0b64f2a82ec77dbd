#pragma once

// Seeded randomness with the same output on every standard library:
// <random> distributions are implementation-defined, so draws and
// shuffles go through these helpers instead.

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace mot {

using rng_t = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Seed for a named sub-stream, e.g. derive_seed(42, "round-2").
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
    return splitmix64(seed ^ splitmix64(fnv1a64(label)));
}

// Uniform integer in [0, n) by rejection; n > 0.
inline std::uint64_t uniform_below(rng_t& rng, std::uint64_t n) {
    const std::uint64_t limit = rng_t::max() - rng_t::max() % n;
    std::uint64_t x;
    do x = rng();
    while (x >= limit);
    return x % n;
}

template <class T>
void seeded_shuffle(std::vector<T>& v, rng_t& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        auto j = static_cast<std::size_t>(uniform_below(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

// k distinct indices from [0, n), in draw order (partial Fisher-Yates).
inline std::vector<std::size_t> sample_without_replacement(rng_t& rng, std::size_t n, std::size_t k) {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k && i < n; ++i) {
        auto j = i + static_cast<std::size_t>(uniform_below(rng, n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k < n ? k : n);
    return pool;
}

}  // namespace mot
