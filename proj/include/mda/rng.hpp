#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mda {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Seed of the stream identified by (master seed, repetition, purpose tag).
// Streams with different tags never share state, so adding a consumer of
// randomness does not shift any other stream.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t rep, std::string_view tag);

// Uniform double in [0,1) from the top 53 bits of one draw.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline Rng make_stream(std::uint64_t master, std::uint64_t rep, std::string_view tag) {
    return Rng(derive_seed(master, rep, tag));
}

}  // namespace mda
