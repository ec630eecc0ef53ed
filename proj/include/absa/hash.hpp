#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace absa {

// FNV-1a 64-bit. Used for provenance/audit hashes, not security.
inline std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
    return fnv1a(s.data(), s.size(), h);
}

std::string hex64(std::uint64_t v);

// Hash of a file's raw bytes; throws ConfigError if the file cannot be read.
std::uint64_t hash_file(const std::string& path);

}  // namespace absa
