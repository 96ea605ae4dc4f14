#include "udn/rng.hpp"

namespace udn {

std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

std::uint64_t derive_key(std::uint64_t seed, std::string_view substream,
                         std::uint64_t entity) noexcept {
  std::uint64_t k = mix64(seed ^ kGoldenGamma);
  k = mix64(k ^ fnv1a64(substream));
  k = mix64(k ^ (entity + kGoldenGamma));
  return k;
}

}  // namespace udn
