#pragma once

#include <cstdint>
#include <random>

namespace shearbayes {

/// splitmix64 finalizer; decorrelates nearby seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Independent deterministic sub-stream (tag, index) of a master seed.
/// The mapping depends only on (seed, tag, index), never on call order,
/// so parallel and serial execution consume identical streams.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t tag,
                                 std::uint64_t index = 0) {
  return std::mt19937_64(mix64(seed ^ mix64(tag ^ mix64(index))));
}

namespace stream_tag {
constexpr std::uint64_t noise = 1;
constexpr std::uint64_t ensemble_init = 2;
constexpr std::uint64_t walker = 3;
constexpr std::uint64_t laplace = 4;
}  // namespace stream_tag

}  // namespace shearbayes
