#pragma once

#include <cstdint>

namespace stocon {

/// splitmix64 finalizer; bijective on 64-bit words.
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based stream: draws are a pure function of (base, counter), so a
/// stream can be recreated at any (seed, path, cell) without replaying history.
struct RngStream {
  std::uint64_t base = 0;
  std::uint64_t counter = 0;

  std::uint64_t next_u64() { return splitmix64(base + 0x9e3779b97f4a7c15ULL * (++counter)); }

  /// Uniform double strictly inside (0, 1).
  double next_unit() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }
};

/// Stream keyed by (seed, path-index, cell-index, component). Distinct keys
/// give statistically independent streams; equal keys give identical draws.
inline RngStream noise_stream(std::uint64_t seed, std::uint64_t path_index, std::uint64_t cell_index,
                              std::uint32_t component = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ (0xa24baed4963ee407ULL + path_index));
  h = splitmix64(h ^ (0x9fb21c651e98df25ULL + cell_index));
  h = splitmix64(h ^ (0xd6e8feb86659fd93ULL + component));
  return RngStream{h, 0};
}

}  // namespace stocon
