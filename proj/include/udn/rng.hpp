#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>

namespace udn {

// All randomness in this project reduces to a stateless mixing function over
// (key, counter) pairs. Any single draw can therefore be re-derived from
// (seed, substream name, entity id, counter) without replaying a sequence,
// which is what lets coupled system variants consume the exact same fading
// and arrival variates even when they evaluate different numbers of links
// per slot.

constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

constexpr std::uint64_t draw_u64(std::uint64_t key, std::uint64_t index) noexcept {
  return mix64(key + (index + 1) * kGoldenGamma);
}

// uniform on [0,1), 53-bit resolution
constexpr double draw_unit(std::uint64_t key, std::uint64_t index) noexcept {
  return static_cast<double>(draw_u64(key, index) >> 11) * 0x1.0p-53;
}

// uniform on (0,1), strictly interior so logs stay finite
constexpr double draw_unit_open(std::uint64_t key, std::uint64_t index) noexcept {
  return static_cast<double>(draw_u64(key, index) >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

// unit-mean exponential, strictly positive
inline double draw_exp(std::uint64_t key, std::uint64_t index) noexcept {
  return -std::log(draw_unit_open(key, index));
}

std::uint64_t fnv1a64(std::string_view s) noexcept;

// Key for a named substream of a seed, bound to one entity (a link, a link
// pair, a realization, ...). Distinct triples give decorrelated streams;
// identical triples always give the identical stream.
std::uint64_t derive_key(std::uint64_t seed, std::string_view substream,
                         std::uint64_t entity) noexcept;

// Splits one derived key into an indexed family of child keys.
constexpr std::uint64_t split_key(std::uint64_t key, std::uint64_t index) noexcept {
  return mix64(key ^ ((index + 1) * kGoldenGamma));
}

// Sequential cursor over one counter-addressed stream. Satisfies
// UniformRandomBitGenerator so std:: distributions can run on top of it.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<std::uint64_t>::max();
  }

  result_type operator()() noexcept { return draw_u64(key_, counter_++); }

  double uniform01() noexcept { return draw_unit(key_, counter_++); }
  bool bernoulli(double p) noexcept { return uniform01() < p; }
  double exponential_mean1() noexcept {
    return -std::log(draw_unit_open(key_, counter_++));
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

  // addressed read; does not move the sequential cursor
  double unit_at(std::uint64_t index) const noexcept { return draw_unit(key_, index); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

inline RngStream derive_stream(std::uint64_t seed, std::string_view substream,
                               std::uint64_t entity) noexcept {
  return RngStream(derive_key(seed, substream, entity));
}

}  // namespace udn
