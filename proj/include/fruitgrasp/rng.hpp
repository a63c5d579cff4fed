#pragma once

#include <cstdint>

namespace fruitgrasp {

// splitmix64 step (Steele et al.); used to derive independent sub-seeds so
// per-sample randomness does not depend on processing order.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stateless seed derivation: mixes a base seed with up to two stream labels.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t s = base;
  (void)splitmix64(s);
  s ^= a + 0x9e3779b97f4a7c15ULL;
  (void)splitmix64(s);
  s ^= b + 0xbf58476d1ce4e5b9ULL;
  return splitmix64(s);
}

}  // namespace fruitgrasp
