#pragma once

// Counter-based random number generation (Philox 4x32-10).
//
// Every draw is an O(1) pure function of (seed, stream, index), so replicated
// simulations are reproducible under any thread count and any evaluation
// order: workers never share generator state.

#include <array>
#include <cmath>
#include <cstdint>

namespace bernet {

inline constexpr uint32_t kPhiloxW32A = 0x9E3779B9u;
inline constexpr uint32_t kPhiloxW32B = 0xBB67AE85u;
inline constexpr uint32_t kPhiloxM4x32A = 0xD2511F53u;
inline constexpr uint32_t kPhiloxM4x32B = 0xCD9E8D57u;

using PhiloxBlock = std::array<uint32_t, 4>;
using PhiloxKey = std::array<uint32_t, 2>;

inline PhiloxBlock philox_round(const PhiloxBlock& ctr, const PhiloxKey& key) {
  const uint64_t prod0 = uint64_t(kPhiloxM4x32A) * ctr[0];
  const uint64_t prod1 = uint64_t(kPhiloxM4x32B) * ctr[2];
  return {uint32_t(prod1 >> 32) ^ ctr[1] ^ key[0], uint32_t(prod1),
          uint32_t(prod0 >> 32) ^ ctr[3] ^ key[1], uint32_t(prod0)};
}

// 10-round Philox 4x32 block function: 128 bits of counter, 64 bits of key.
inline PhiloxBlock philox4x32(PhiloxBlock ctr, PhiloxKey key) {
  for (int round = 0;; ++round) {
    ctr = philox_round(ctr, key);
    if (round == 9) break;
    key[0] += kPhiloxW32A;
    key[1] += kPhiloxW32B;
  }
  return ctr;
}

// SplitMix64 finalizer; used only to derive independent Philox keys for
// distinct usage domains (net nodes, tree nodes, noise, ...) from one seed.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Draw-domain tags keep independently indexed draw families from ever
// addressing the same (key, counter) pair.
enum class RngDomain : uint64_t {
  kNet = 1,
  kTreeNode = 2,
  kNoise = 3,
  kChain = 4,
  kScene = 5,
  kResample = 6,
  kTrack = 7,
  kGeneric = 8,
};

inline PhiloxKey derive_key(uint64_t seed, RngDomain domain, uint64_t extra = 0) {
  uint64_t s = splitmix64(seed ^ splitmix64(uint64_t(domain)));
  if (extra != 0) s = splitmix64(s ^ extra);
  return {uint32_t(s), uint32_t(s >> 32)};
}

// Indexed 128-bit block stream: block(i) is addressable in O(1).
struct CounterStream {
  PhiloxKey key{0, 0};
  uint64_t stream = 0;

  CounterStream() = default;
  CounterStream(uint64_t seed, RngDomain domain, uint64_t stream_id)
      : key(derive_key(seed, domain)), stream(stream_id) {}

  PhiloxBlock block(uint64_t index) const {
    return philox4x32({uint32_t(index), uint32_t(index >> 32),
                       uint32_t(stream), uint32_t(stream >> 32)},
                      key);
  }

  uint32_t word32(uint64_t draw_index) const {
    return block(draw_index >> 2)[draw_index & 3];
  }
};

// Seed for replicate i of a seeded sweep: an avalanche hash of (seed, i), so
// replicate nets are as independent as nets generated from fresh seeds while
// any subset of replicates stays replayable.
inline uint64_t replicate_seed(uint64_t seed, uint64_t i) {
  return splitmix64(seed ^ splitmix64(i + 0x51A5C7D9E2B81037ull));
}

// Maps a 32-bit word to the open interval (0,1); every value is attainable
// and the mapping never returns an exact 0 or 1.
inline double u32_to_unit(uint32_t x) { return (double(x) + 0.5) * 0x1p-32; }

inline double uniform01(const CounterStream& s, uint64_t draw_index) {
  return u32_to_unit(s.word32(draw_index));
}

// Integer threshold equivalent of u32_to_unit(w) < p, avoiding a float
// compare per node: count of w values with (w + 0.5)/2^32 < p.
inline uint64_t bernoulli_threshold(double p) {
  if (p <= 0.0) return 0;
  if (p >= 1.0) return uint64_t(1) << 32;
  double t = std::ceil(p * 4294967296.0 - 0.5);
  if (t < 0.0) t = 0.0;
  return uint64_t(t);
}

// One standard normal per index via Box-Muller on the index's own block.
inline double gaussian01(const CounterStream& s, uint64_t draw_index) {
  const PhiloxBlock b = s.block(draw_index);
  const double u1 = u32_to_unit(b[0]);
  const double u2 = u32_to_unit(b[1]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

}  // namespace bernet
