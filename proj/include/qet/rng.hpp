#pragma once

#include <cstdint>

namespace qet {

// Counter-based generator: every output word is a pure function of
// (seed, stream, index), so shot i of stream s is the same number on every
// platform and under any parallel partition of the index range.
struct CounterRng {
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t word(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    std::uint64_t z = mix(seed ^ 0x243f6a8885a308d3ULL);
    z = mix(z ^ stream);
    z = mix(z ^ index);
    return mix(z);
  }

  // Uniform in [0, 1) with 53 significant bits.
  static double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return static_cast<double>(word(seed, stream, index) >> 11) * 0x1.0p-53;
  }
};

// FNV-1a over bytes; used to derive per-circuit RNG streams from the
// serialized gate list.
inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace qet
