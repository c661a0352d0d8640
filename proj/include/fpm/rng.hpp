#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace fpm {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based seed derivation: the stream for (base, i, j, ...) depends only
/// on the path, never on how many other streams were drawn before it.
inline constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t s = splitmix64(base);
    for (auto p : path) s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
    return s;
}

inline constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
    return derive_seed(base, {index});
}

// Stable stream tags so that call sites do not collide.
namespace stream {
inline constexpr std::uint64_t probabilities = 0x70726f62;
inline constexpr std::uint64_t attributes = 0x61747472;
inline constexpr std::uint64_t communities = 0x636f6d6d;
inline constexpr std::uint64_t sampling = 0x73616d70;
inline constexpr std::uint64_t rollouts = 0x726f6c6c;
inline constexpr std::uint64_t embedding = 0x656d6264;
inline constexpr std::uint64_t qnet = 0x716e6574;
inline constexpr std::uint64_t training = 0x74726e67;
inline constexpr std::uint64_t baseline = 0x62617365;
inline constexpr std::uint64_t evaluation = 0x6576616c;
} // namespace stream

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

} // namespace fpm
