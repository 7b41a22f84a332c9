#pragma once
#include <cstdint>
#include <random>

namespace eecsim {

// splitmix64 step; used to derive independent sub-seeds from one experiment seed.
inline uint64_t split_seed(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// std::uniform_*_distribution is implementation-defined, so draws go through
// these helpers to keep runs bit-reproducible across toolchains.
inline double rand_unit(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;  // [0,1)
}

inline int rand_index(std::mt19937_64& g, int n) {
  return static_cast<int>(g() % static_cast<uint64_t>(n));
}

}  // namespace eecsim
