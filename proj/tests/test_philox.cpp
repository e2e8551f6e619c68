#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdint>
#include <set>

#include "bernet/philox.hpp"
#include "bernet/stats.hpp"

namespace {

// Reference oracle: a deliberately different formulation of Philox 4x32-10
// (precomputed key schedule, separate state copies) used to cross-check the
// library's implementation.
std::array<uint32_t, 4> reference_philox(std::array<uint32_t, 4> x,
                                         std::array<uint32_t, 2> k) {
  std::array<std::array<uint32_t, 2>, 10> schedule{};
  for (int r = 0; r < 10; ++r) {
    schedule[r] = k;
    k[0] += 0x9E3779B9u;
    k[1] += 0xBB67AE85u;
  }
  for (int r = 0; r < 10; ++r) {
    const uint64_t m0 = 0xD2511F53ull * x[0];
    const uint64_t m1 = 0xCD9E8D57ull * x[2];
    const uint32_t hi0 = uint32_t(m0 >> 32), lo0 = uint32_t(m0);
    const uint32_t hi1 = uint32_t(m1 >> 32), lo1 = uint32_t(m1);
    x = {hi1 ^ x[1] ^ schedule[r][0], lo1, hi0 ^ x[3] ^ schedule[r][1], lo0};
  }
  return x;
}

}  // namespace

TEST_CASE("philox matches an independent reference on random inputs", "[philox]") {
  // Drive the comparison with a trivial LCG so the inputs do not depend on
  // the generator under test.
  uint64_t lcg = 0x02468ACE13579BDFull;
  auto next = [&lcg] {
    lcg = lcg * 6364136223846793005ull + 1442695040888963407ull;
    return uint32_t(lcg >> 32);
  };
  for (int i = 0; i < 2000; ++i) {
    const bernet::PhiloxBlock ctr{next(), next(), next(), next()};
    const bernet::PhiloxKey key{next(), next()};
    REQUIRE(bernet::philox4x32(ctr, key) == reference_philox(ctr, key));
  }
}

TEST_CASE("philox known-answer vectors", "[philox]") {
  using B = bernet::PhiloxBlock;
  CHECK(bernet::philox4x32({0, 0, 0, 0}, {0, 0}) ==
        B{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(bernet::philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                           {0xffffffffu, 0xffffffffu}) ==
        B{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(bernet::philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                           {0xa4093822u, 0x299f31d0u}) ==
        B{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("counter stream is O(1)-addressable and stream-separated", "[philox]") {
  const bernet::CounterStream a(42, bernet::RngDomain::kNet, 0);
  const bernet::CounterStream b(42, bernet::RngDomain::kNet, 1);
  const bernet::CounterStream c(43, bernet::RngDomain::kNet, 0);
  const bernet::CounterStream d(42, bernet::RngDomain::kNoise, 0);

  CHECK(a.block(7) == a.block(7));
  CHECK(a.block(7) != a.block(8));
  CHECK(a.block(7) != b.block(7));
  CHECK(a.block(7) != c.block(7));
  CHECK(a.block(7) != d.block(7));

  // word32 must tile blocks without overlap.
  const auto blk = a.block(3);
  for (int i = 0; i < 4; ++i) CHECK(a.word32(12 + i) == blk[i]);
}

TEST_CASE("uniform01 values fill (0,1) evenly", "[philox]") {
  const bernet::CounterStream s(2024, bernet::RngDomain::kGeneric, 5);
  const int n = 200000;
  int buckets[10] = {0};
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = bernet::uniform01(s, i);
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    ++buckets[int(u * 10.0)];
  }
  CHECK(std::abs(sum / n - 0.5) < 0.005);  // ~8 standard errors
  for (int b = 0; b < 10; ++b)
    CHECK(std::abs(buckets[b] / double(n) - 0.1) < 0.006);
}

TEST_CASE("bernoulli threshold reproduces the uniform comparison", "[philox]") {
  for (const double p : {0.0, 1e-9, 0.1, 0.2444, 0.5, 0.9, 1.0 - 1e-12, 1.0}) {
    const uint64_t thr = bernet::bernoulli_threshold(p);
    for (const uint32_t w : {0u, 1u, 0x7fffffffu, 0xfffffffeu, 0xffffffffu}) {
      CHECK((uint64_t(w) < thr) == (bernet::u32_to_unit(w) < p));
    }
  }
}

TEST_CASE("gaussian01 has standard moments", "[philox]") {
  const bernet::CounterStream s(7, bernet::RngDomain::kNoise, 0);
  bernet::RunningStat acc;
  const int n = 200000;
  double sum3 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = bernet::gaussian01(s, i);
    acc.add(z);
    sum3 += z * z * z;
  }
  CHECK(std::abs(acc.mean) < 0.01);
  CHECK(std::abs(acc.sd() - 1.0) < 0.01);
  CHECK(std::abs(sum3 / n) < 0.05);
}
