#pragma once

#include <cstdint>
#include <random>

namespace irscene {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Child seed for stream `index` of `parent`: a hash of (parent, index).
/// Children of one parent are independent of evaluation order, which is what
/// lets batch scenes run in any order or in parallel.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
  return mix64(mix64(parent) ^ mix64(index ^ 0x6a09e667f3bcc909ULL));
}

/// Fixed sub-stream indices used inside a single scene.
enum class SceneStream : std::uint64_t {
  Thermal = 1,
  Selection = 2,
  Placement = 3,
  Noise = 4,
};

constexpr std::uint64_t derive_seed(std::uint64_t parent, SceneStream stream) {
  return derive_seed(parent, static_cast<std::uint64_t>(stream));
}

}  // namespace irscene
