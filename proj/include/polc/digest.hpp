#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace polc {

/// 64-bit FNV-1a. Stable across platforms; also the published bucket hash of
/// the bag-of-words mock embedder (bucket = fnv1a64(token) % dimension).
constexpr std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t hash = 14695981039346656037ULL;
    for (unsigned char byte : data) {
        hash ^= byte;
        hash *= 1099511628211ULL;
    }
    return hash;
}

/// 16-hex-digit content digest used for taxonomy fingerprints, policy digests,
/// and raw-response digests.
inline std::string content_digest(std::string_view data) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::uint64_t hash = fnv1a64(data);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = kHex[hash & 0xF];
        hash >>= 4;
    }
    return out;
}

}  // namespace polc
