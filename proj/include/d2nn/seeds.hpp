#pragma once

#include <cstdint>
#include <initializer_list>

namespace d2nn {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Sub-seed for a path of indices below a master seed:
///   h = mix64(master); for each index i: h = mix64(h ^ i)
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(master);
  for (std::uint64_t i : path) h = mix64(h ^ i);
  return h;
}

}  // namespace d2nn
