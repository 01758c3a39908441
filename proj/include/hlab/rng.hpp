#pragma once

#include <array>
#include <cstdint>

namespace hlab {

// Philox4x32-10 block function.
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxCounter philox4x32(PhiloxCounter c, PhiloxKey k) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += 0x9E3779B9u;
      k[1] += 0xBB67AE85u;
    }
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
    c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0],
         static_cast<std::uint32_t>(p1),
         static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1],
         static_cast<std::uint32_t>(p0)};
  }
  return c;
}

// Independent noise families. S is driven by kMain; kDriver2 is the second
// Brownian motion in two-factor markets.
enum class Stream : std::uint32_t {
  kMain = 0,
  kDriver2 = 1,
  kCoin = 2,
  kBridge = 3,
  kBootstrap = 4,
};

// Stateless generator: every draw is a pure function of
// (seed, path_index, stream, counter).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t path_index, Stream stream);

  std::array<double, 2> normal_pair(std::uint64_t block) const;
  double normal(std::uint64_t index) const;
  double uniform(std::uint64_t index) const;
  std::array<double, 2> uniform_pair(std::uint64_t block) const;

 private:
  PhiloxCounter counter(std::uint64_t block) const;

  PhiloxKey key_;
  std::uint32_t path_lo_;
  std::uint32_t path_hi_;
};

// Open-interval uniform with 52 random bits; never rounds to 0 or 1.
double to_unit_open(std::uint32_t hi, std::uint32_t lo);

// Wichura AS241 (PPND16), relative accuracy about 1e-16.
double inverse_normal_cdf(double p);
double normal_cdf(double x);

}  // namespace hlab
