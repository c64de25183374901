#pragma once

#include <cstdint>
#include <string_view>

namespace replykit {

// FNV-1a, 64 bit. Used for feature hashing and artifact fingerprints; the
// seed is folded in up front so the same token maps to the same bucket only
// under the same seed (the seed is persisted with trained models).
constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;
constexpr std::uint64_t kDefaultHashSeed = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t fnv1a64(std::string_view data,
                                std::uint64_t state = kFnvOffset) {
  std::uint64_t h = state;
  for (char c : data) {
    h ^= static_cast<std::uint8_t>(c);
    h *= kFnvPrime;
  }
  return h;
}

constexpr std::uint64_t fnv1a64_seeded(std::string_view data,
                                       std::uint64_t seed) {
  std::uint64_t h = kFnvOffset;
  for (int i = 0; i < 8; ++i) {
    h ^= (seed >> (8 * i)) & 0xffu;
    h *= kFnvPrime;
  }
  return fnv1a64(data, h);
}

}  // namespace replykit
