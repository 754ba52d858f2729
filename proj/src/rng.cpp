#include "medmenu/rng.hpp"

#include <cmath>
#include <numbers>

namespace medmenu {

std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t key_a, std::uint64_t key_b) {
  SplitMix64 mix(master ^ 0x6a09e667f3bcc909ULL);
  std::uint64_t s = mix();
  SplitMix64 a(s ^ (key_a * 0x9e3779b97f4a7c15ULL));
  s = a();
  SplitMix64 b(s ^ (key_b * 0xc2b2ae3d27d4eb4fULL + 0x165667b19e3779f9ULL));
  return b();
}

double standard_normal(SplitMix64& rng) {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace medmenu
