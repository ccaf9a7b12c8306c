#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace savac {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A draw is a
// pure function of (key, counter), which makes every noise coefficient
// addressable by (seed, path, step, mode) without sequential state.
class Philox4x32 {
 public:
  using counter_type = std::array<std::uint32_t, 4>;
  using key_type = std::array<std::uint32_t, 2>;

  static constexpr int rounds = 10;

  static counter_type generate(counter_type ctr, key_type key) {
    for (int r = 0; r < rounds; ++r) {
      if (r > 0) {
        key[0] += kWeylA;
        key[1] += kWeylB;
      }
      ctr = round(ctr, key);
    }
    return ctr;
  }

  static key_type key_from_seed(std::uint64_t seed) {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  }

 private:
  static constexpr std::uint32_t kWeylA = 0x9E3779B9u;
  static constexpr std::uint32_t kWeylB = 0xBB67AE85u;
  static constexpr std::uint32_t kMulA = 0xD2511F53u;
  static constexpr std::uint32_t kMulB = 0xCD9E8D57u;

  static counter_type round(const counter_type& c, const key_type& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMulA) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMulB) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

// Uniform in (0, 1] from two 32-bit words (53 bits of precision).
inline double uniform_open_closed(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits =
      ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;  // 53 bits
  return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

// Standard normal via Box-Muller from one Philox block.
inline double standard_normal(const Philox4x32::counter_type& block) {
  const double u1 = uniform_open_closed(block[0], block[1]);
  const double u2 = uniform_open_closed(block[2], block[3]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace savac
