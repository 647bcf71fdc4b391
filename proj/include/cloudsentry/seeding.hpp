#pragma once

#include <cstdint>
#include <string_view>

namespace cloudsentry {

// SplitMix64 finalizer. Used to derive independent seeds and for keyed draws.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed for a named sub-stream of a global seed ("topology", "logs", ...).
constexpr std::uint64_t derive_seed(std::uint64_t global, std::string_view label) noexcept {
    return mix64(global ^ mix64(fnv1a(label)));
}

/// Seed for an indexed sub-stream (per vertex, per rollout, per client).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
    return mix64(base ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Uniform double in [0,1) from a 64-bit hash value.
constexpr double unit_interval(std::uint64_t h) noexcept {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace cloudsentry
