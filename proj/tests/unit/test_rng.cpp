#include <doctest.h>

#include <cmath>
#include <set>

#include "iafs/rng.hpp"
#include "iafs/tensor.hpp"

using iafs::Rng;

TEST_CASE("philox known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(Rng::philox_block(A4{0, 0, 0, 0}, {0, 0}) ==
        A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Rng::philox_block(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                          {0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Rng::philox_block(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                          {0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("same seed gives the same stream") {
  Rng a(0), b(0);
  const auto x = iafs::sample_standard_normal(a, {1, 2, 2});
  const auto y = iafs::sample_standard_normal(b, {1, 2, 2});
  CHECK(x == y);
  Rng c(1);
  CHECK_FALSE(x == iafs::sample_standard_normal(c, {1, 2, 2}));
}

TEST_CASE("split streams are independent of sibling usage") {
  const Rng root(42);
  Rng first = root.split(3);
  const double reference = first.normal();
  Rng other = root.split(7);
  for (int i = 0; i < 100; ++i) other.normal();
  Rng again = root.split(3);
  CHECK(again.normal() == reference);
  std::set<std::uint64_t> seen;
  for (std::uint64_t k = 0; k < 64; ++k) seen.insert(root.split(k).next_u64());
  CHECK(seen.size() == 64);
}

TEST_CASE("uniform stays in the open unit interval") {
  Rng r(5);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("normal moments over 1e6 draws") {
  Rng r(2024);
  const int n = 1000000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double v = r.normal();
    s += v;
    s2 += v * v;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.005);
  CHECK(std::abs(var - 1.0) < 0.01);
}

TEST_CASE("mix64 is a bijection on a sample") {
  std::set<std::uint64_t> out;
  for (std::uint64_t i = 0; i < 1000; ++i) out.insert(iafs::mix64(i));
  CHECK(out.size() == 1000);
}
