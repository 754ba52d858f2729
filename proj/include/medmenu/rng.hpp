#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace medmenu {

/// Small counter-style generator used for keyed substreams. Satisfies
/// UniformRandomBitGenerator so it plugs into <random> distributions.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform draw on the open interval (0, 1).
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// Stable 64-bit hash of a tag (FNV-1a).
std::uint64_t hash_tag(std::string_view tag);

/// Derives an independent substream seed from a master seed and keys.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t key_a, std::uint64_t key_b = 0);

/// Standard normal draw (Box-Muller, one value per call).
double standard_normal(SplitMix64& rng);

}  // namespace medmenu
