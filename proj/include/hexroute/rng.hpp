#pragma once
#include <cstdint>
#include <random>

namespace hexroute {

// Deterministic uniform helpers. std::uniform_*_distribution is
// implementation-defined, so byte-reproducible artifacts must not use it;
// mt19937_64 itself is fully specified by the standard.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent stream for (seed, stream_index) pairs, e.g. one per restart.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream + 0x9e3779b97f4a7c15ULL));
}

inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& gen, double lo, double hi) {
    return lo + (hi - lo) * uniform01(gen);
}

// Uniform index in [0, n). Modulo bias is irrelevant for n << 2^64 and the
// result is identical on every platform.
inline std::size_t uniform_index(std::mt19937_64& gen, std::size_t n) {
    return static_cast<std::size_t>(gen() % static_cast<std::uint64_t>(n));
}

}  // namespace hexroute
