#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gprg {

// All randomness in the library flows from one master seed through the
// splitting rule below: a stream tag (one per consumer, e.g. "trial",
// "testset", "features") plus an index select an independent engine.
// Trial t therefore gets the same stream no matter how trials are
// scheduled across threads.

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                                    std::uint64_t index) {
    return splitmix64(splitmix64(master ^ fnv1a64(stream)) + index);
}

inline std::mt19937_64 make_rng(std::uint64_t master, std::string_view stream,
                                std::uint64_t index) {
    return std::mt19937_64(derive_seed(master, stream, index));
}

}  // namespace gprg
