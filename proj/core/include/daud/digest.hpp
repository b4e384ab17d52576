#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace daud {

// Hex-encoded SHA-256, used for request digests, cache checksums and stage keys.
std::string sha256_hex(std::string_view data);

// FNV-1a 64-bit. Stable across platforms, unlike std::hash.
constexpr uint64_t kFnvOffset = 14695981039346656037ull;
constexpr uint64_t kFnvPrime = 1099511628211ull;

inline uint64_t fnv1a64(std::string_view s, uint64_t basis = kFnvOffset) {
  uint64_t h = basis;
  for (unsigned char c : s) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace daud
