#pragma once

#include <cstdint>
#include <cmath>

namespace bdsde {

/// Counter-based pseudo-random generator.
///
/// Every draw is a pure function of (seed, stream, id0, id1, counter), so
/// particles, noise modes and time intervals can be sampled in any order --
/// and from any worker thread -- while producing identical values. Streams
/// never share state; there is nothing to advance or lock.
namespace rng {

// stream tags, one per consumer of randomness
inline constexpr std::uint64_t kCloud = 1;
inline constexpr std::uint64_t kForwardDriver = 2;
inline constexpr std::uint64_t kBackwardDriver = 3;
inline constexpr std::uint64_t kProbe = 4;
inline constexpr std::uint64_t kReplica = 5;

inline std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t key(std::uint64_t seed, std::uint64_t stream,
                         std::uint64_t id0, std::uint64_t id1,
                         std::uint64_t counter) {
    std::uint64_t h = mix(seed ^ 0x8000000000000000ull);
    h = mix(h ^ stream);
    h = mix(h ^ id0);
    h = mix(h ^ id1);
    h = mix(h ^ counter);
    return h;
}

/// uniform in (0, 1); never returns 0 or 1 exactly
inline double uniform(std::uint64_t seed, std::uint64_t stream,
                      std::uint64_t id0, std::uint64_t id1,
                      std::uint64_t counter) {
    const std::uint64_t bits = key(seed, stream, id0, id1, counter);
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// standard normal via Box-Muller; fixed consumption of two counters
inline double normal(std::uint64_t seed, std::uint64_t stream,
                     std::uint64_t id0, std::uint64_t id1,
                     std::uint64_t counter) {
    const double u1 = uniform(seed, stream, id0, id1, 2 * counter);
    const double u2 = uniform(seed, stream, id0, id1, 2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace rng
}  // namespace bdsde
