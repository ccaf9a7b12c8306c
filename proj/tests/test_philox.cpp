#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "savac/philox.hpp"

using savac::Philox4x32;

namespace {

void expect_block(Philox4x32::counter_type ctr, Philox4x32::key_type key,
                  Philox4x32::counter_type expected) {
  EXPECT_EQ(Philox4x32::generate(ctr, key), expected);
}

}  // namespace

// Published known-answer vectors for Philox4x32 with 10 rounds.
TEST(Philox, KnownAnswerZero) {
  expect_block({0, 0, 0, 0}, {0, 0}, {0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
}

TEST(Philox, KnownAnswerAllOnes) {
  expect_block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu},
               {0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
}

TEST(Philox, KnownAnswerPiDigits) {
  expect_block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u},
               {0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST(Philox, KeyFromSeedSplitsWords) {
  const auto k = Philox4x32::key_from_seed(0x0123456789abcdefull);
  EXPECT_EQ(k[0], 0x89abcdefu);
  EXPECT_EQ(k[1], 0x01234567u);
}

TEST(Philox, UniformRange) {
  EXPECT_DOUBLE_EQ(savac::uniform_open_closed(0, 0), std::ldexp(1.0, -53));
  EXPECT_DOUBLE_EQ(savac::uniform_open_closed(0xffffffffu, 0xffffffffu), 1.0);
  const double n = savac::standard_normal({0, 0, 0, 0});
  EXPECT_TRUE(std::isfinite(n));
}
