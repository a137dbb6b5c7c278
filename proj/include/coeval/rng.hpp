#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace coeval {

// SplitMix64 (Steele, Lea & Flood). Used to expand seeds.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();

 private:
  std::uint64_t state_;
};

// xoshiro256** 1.0 (Blackman & Vigna). State is filled from SplitMix64(seed),
// so the whole stream is pinned by a single 64-bit seed on every platform.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed);

  std::uint64_t next();
  std::uint64_t operator()() { return next(); }
  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  // Uniform on [0, bound) by rejection of the biased low range; bound > 0.
  std::uint64_t below(std::uint64_t bound);
  // Standard normal via the Box-Muller transform (one draw per call).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::array<std::uint64_t, 4> s_{};
};

// Deterministic seed derivation: folds each tag into the master seed through
// SplitMix64 so independent streams can be keyed by (seed, stream, a, b, ...).
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags);

// FNV-1a, for turning identifiers into stream tags.
std::uint64_t fnv1a(std::span<const char> text);

// In-place Fisher-Yates shuffle driven by Xoshiro256::below.
template <typename T>
void shuffle(std::vector<T>& items, Xoshiro256& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace coeval
