#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mrtele {

/// Independent engine per subsystem label, all derived from one run seed, so a
/// subsystem's stream does not shift when another subsystem draws more or less.
inline std::mt19937_64 substream(std::uint64_t seed, std::string_view label) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::uint64_t z = seed ^ h;
  // splitmix64 finaliser
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return std::mt19937_64(z);
}

}  // namespace mrtele
