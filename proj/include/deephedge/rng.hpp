#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace deephedge {

/// SplitMix64 finalizer (Steele, Lea, Flood 2014). Used only to derive
/// independent stream seeds; the streams themselves are std::mt19937_64.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a of a short tag, used to separate seed domains (training vs evaluation).
constexpr std::uint64_t domain_tag(std::string_view tag) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

/// Engine for one stream. Algorithm identity: mt19937_64 seeded with
/// derive_seed(seed, stream); Gaussians from std::normal_distribution.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(derive_seed(seed, stream));
}

}  // namespace deephedge
