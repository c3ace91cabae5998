#pragma once

// Reproducible randomness. Everything random in the pipeline goes through
// SplitMix64 (Steele, Lea & Flood 2014), either as a sequential stream or
// as a counter-based hash of (seed, key, index). Both are fully specified
// here, so outputs do not depend on the standard library implementation.

#include <cstdint>
#include <limits>
#include <string_view>
#include <vector>

namespace varid {

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a over bytes. Used only to fold string keys into seeds.
inline constexpr std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Derives an independent 64-bit value from (seed, key, index).
inline constexpr std::uint64_t keyed_hash(std::uint64_t seed, std::string_view key,
                                          std::uint64_t index) {
  std::uint64_t h = splitmix64_mix(seed + 0x9e3779b97f4a7c15ULL);
  h = splitmix64_mix(h ^ fnv1a64(key));
  h = splitmix64_mix(h ^ (index + 0x9e3779b97f4a7c15ULL));
  return h;
}

/// Maps 64 random bits to a double uniform on [0, 1) with 53-bit resolution.
inline constexpr double to_unit_double(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double keyed_uniform(std::uint64_t seed, std::string_view key, std::uint64_t index) {
  return to_unit_double(keyed_hash(seed, key, index));
}

class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  SplitMix64(std::uint64_t seed, std::string_view key) : state_(keyed_hash(seed, key, 0)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return splitmix64_mix(state_);
  }

  /// Uniform integer in [0, bound), unbiased (Lemire's multiply-shift with rejection).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::uint64_t state_;
};

/// k distinct indices from [0, n) in draw order (partial Fisher-Yates).
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, SplitMix64& rng);

template <typename T>
void shuffle(std::vector<T>& v, SplitMix64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace varid
