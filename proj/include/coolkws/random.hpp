#ifndef COOLKWS_RANDOM_HPP
#define COOLKWS_RANDOM_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace coolkws {

// Root seed expansion. Every consumer of randomness derives its own seed as
// splitmix64(root ^ fnv1a(tag) ^ splitmix64(counter)), so adding a consumer
// never perturbs the draws of another one.

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view tag,
                                    std::uint64_t counter = 0) noexcept {
  return splitmix64(root ^ fnv1a(tag) ^ splitmix64(counter));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t root, std::string_view tag, std::uint64_t counter = 0) {
  return Rng(derive_seed(root, tag, counter));
}

}  // namespace coolkws

#endif  // COOLKWS_RANDOM_HPP
