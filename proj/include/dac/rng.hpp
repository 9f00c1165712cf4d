#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dac {

/// All randomness in a run flows from one config seed through named
/// sub-streams, so each module draws from its own reproducible stream.
inline std::mt19937_64 sub_stream(uint64_t seed, std::string_view name) {
    uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    std::seed_seq seq{
        static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
        static_cast<uint32_t>(h), static_cast<uint32_t>(h >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace dac
