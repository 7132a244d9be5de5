// xoshiro256** (Blackman & Vigna) with splitmix64 seeding.
//
// The simulator needs a fast 64-bit generator whose stream depends only on
// the seed. std::mt19937_64 is several times slower per draw, and
// absl::InsecureBitGen salts its seed per process.
#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <limits>

namespace qsi {

constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  /// State expanded from `seed` with splitmix64.
  explicit constexpr Xoshiro256(std::uint64_t seed = 0) noexcept {
    for (auto& word : s_) word = splitmix64(seed);
  }

  /// Raw state; must not be all zero.
  static constexpr Xoshiro256 from_state(const std::array<std::uint64_t, 4>& state) noexcept {
    Xoshiro256 g;
    g.s_ = state;
    return g;
  }

  /// Generator for substream `key` of `seed`.
  template <typename... Keys>
  static constexpr Xoshiro256 substream(std::uint64_t seed, Keys... keys) noexcept {
    std::uint64_t mix = seed;
    std::uint64_t h = splitmix64(mix);
    ((mix = h ^ static_cast<std::uint64_t>(keys), h = splitmix64(mix)), ...);
    return Xoshiro256(h);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = std::rotl(s_[3], 45);
    return result;
  }

  friend constexpr bool operator==(const Xoshiro256&, const Xoshiro256&) = default;

 private:
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace qsi
