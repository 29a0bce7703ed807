#pragma once

// Counter-based stream derivation: every (seed, point, channel) triple gets
// its own engine, so results do not depend on evaluation order.

#include <cstdint>
#include <random>
#include <string_view>

namespace hyperent {

constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::mt19937_64 keyed_engine(std::uint64_t seed, std::uint64_t index, std::string_view channel)
{
    const std::uint64_t k = splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL) ^ fnv1a64(channel));
    std::seed_seq seq{static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
    return std::mt19937_64(seq);
}

/// Poisson draw; mean <= 0 yields 0.
template <class Engine>
std::uint64_t poisson_sample(Engine& eng, double mean)
{
    if (!(mean > 0.0)) return 0;
    std::poisson_distribution<std::uint64_t> dist(mean);
    return dist(eng);
}

} // namespace hyperent
