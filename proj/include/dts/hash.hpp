#pragma once

#include <cstdint>
#include <string_view>

namespace dts {

// 64-bit FNV-1a. Used for vocabulary and config fingerprints; stable across
// platforms and runs by construction.
inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace dts
