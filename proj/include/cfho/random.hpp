#pragma once

#include <cstdint>
#include <random>

namespace cfho {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Child seed for stream `index` under `parent`. Streams with distinct
/// indices are independent of each other and of evaluation order.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(parent) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

inline Rng make_rng(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    return Rng(seq);
}

}  // namespace cfho
