#pragma once

#include <cstdint>
#include <random>

namespace hpsfde {

using Engine = std::mt19937_64;

/// Purpose of a per-path random stream. Each path owns one stream per purpose
/// so the regime path and the Brownian increments never share draws.
enum class StreamKind : std::uint64_t { Regime = 0, Brownian = 1 };

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Counter scheme for per-path seeds:
///   path_seed(root, i) = splitmix64(splitmix64(root) + i)
/// A path seed is expanded into one engine per StreamKind by
///   stream_engine(seed, kind) seeded with seed_seq{lo(s), hi(s), kind, 0x5eed}
/// where s = splitmix64(seed ^ (kind+1) * golden). Paths are therefore
/// independent of execution order and can be regenerated individually.
inline std::uint64_t path_seed(std::uint64_t root_seed, std::uint64_t path_index) noexcept {
    return splitmix64(splitmix64(root_seed) + path_index);
}

inline Engine stream_engine(std::uint64_t seed, StreamKind kind) {
    const auto k = static_cast<std::uint64_t>(kind);
    const std::uint64_t s = splitmix64(seed ^ ((k + 1) * 0x9E3779B97F4A7C15ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                      static_cast<std::uint32_t>(k), 0x5eedU};
    return Engine(seq);
}

}  // namespace hpsfde
