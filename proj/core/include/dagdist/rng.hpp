#pragma once

#include <cstdint>
#include <random>

namespace dagdist {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Derives an independent stream from a master seed. Streams are stable across
// runs and do not depend on thread scheduling, so parallel sampling stays
// reproducible: stream i always sees the same generator state.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(splitmix64(master) ^
                    splitmix64(stream * 0xD1B54A32D192ED03ull + 0x8BB84B93962EACC9ull));
}

inline std::mt19937_64 stream_rng(std::uint64_t master, std::uint64_t stream) {
  return std::mt19937_64(mix_seed(master, stream));
}

}  // namespace dagdist
