#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "bwf/rng.hpp"

using bwf::RngStream;

TEST_CASE("philox known answer: zero key, zero counter") {
  // Random123 kat_vectors: philox4x32_10 with ctr = key = 0 gives
  // 6627e8d5 e169c58d bc57ac4c 9b00dbd8.
  RngStream rng(0, 0);
  CHECK(rng.next_u64() == ((0x6627e8d5ULL << 32) | 0xe169c58dULL));
  CHECK(rng.next_u64() == ((0xbc57ac4cULL << 32) | 0x9b00dbd8ULL));
}

TEST_CASE("equal seed and stream reproduce the first 10^4 draws") {
  RngStream a(42, 3), b(42, 3);
  for (int i = 0; i < 10000; ++i) {
    REQUIRE(a.next_u64() == b.next_u64());
  }
  RngStream c(42, 3), d(42, 3);
  for (int i = 0; i < 1000; ++i) REQUIRE(c.normal() == d.normal());
}

TEST_CASE("distinct stream ids share no prefix") {
  RngStream base(7);
  std::set<std::uint64_t> firsts;
  for (std::uint64_t s = 0; s < 64; ++s) {
    RngStream r = base.derive(s);
    CHECK(r.stream_id() == s);
    CHECK(r.seed() == 7);
    firsts.insert(r.next_u64());
  }
  CHECK(firsts.size() == 64);
  RngStream x(7, 0), y(7, 1);
  int equal = 0;
  for (int i = 0; i < 1000; ++i) equal += x.next_u64() == y.next_u64();
  CHECK(equal == 0);
}

TEST_CASE("uniform stays in the open unit interval with mean 1/2") {
  RngStream rng(11);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("normal and gamma moments") {
  RngStream rng(5);
  const int n = 200000;
  double s1 = 0, s2 = 0, g = 0, g_small = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s1 += z;
    s2 += z * z;
    g += rng.gamma(3.0);
    g_small += rng.gamma(0.5);
  }
  CHECK(std::abs(s1 / n) < 0.01);
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(g / n == doctest::Approx(3.0).epsilon(0.01));
  CHECK(g_small / n == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("usable as a UniformRandomBitGenerator") {
  RngStream rng(1);
  std::uniform_int_distribution<int> die(1, 6);
  for (int i = 0; i < 100; ++i) {
    const int v = die(rng);
    CHECK(v >= 1);
    CHECK(v <= 6);
  }
}
