#pragma once

#include <cstdint>
#include <random>

namespace ultrasr {

using Rng = std::mt19937_64;

// Independent streams derived from one seed, one per consumer, so adding a
// consumer never shifts the draws seen by the others.
enum class Stream : std::uint64_t {
  init = 1,
  scale = 2,
  crop = 3,
  query = 4,
  image = 5,
  dataset = 6,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline Rng make_rng(std::uint64_t seed, Stream stream) {
  return Rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream))));
}

}  // namespace ultrasr
