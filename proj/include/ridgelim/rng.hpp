#pragma once

#include <array>
#include <cstdint>

namespace ridgelim::rng {

// SplitMix64 finalizer; also used to derive stream keys.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Key for an independent stream addressed by (base_seed, a, b, c), e.g.
// (seed, grid index, trial index, stream tag). Absorbing the words through
// the finalizer keeps distinct tuples on distinct keys.
constexpr std::uint64_t derive_key(std::uint64_t base, std::uint64_t a,
                                   std::uint64_t b, std::uint64_t c) noexcept {
  std::uint64_t h = mix64(base);
  h = mix64(h ^ mix64(a + 0x100000001b3ull));
  h = mix64(h ^ mix64(b + 0xc6a4a7935bd1e995ull));
  h = mix64(h ^ mix64(c + 0x2545F4914F6CDD1Dull));
  return h;
}

// Standard normal quantile (inverse CDF), Wichura's PPND16 rational
// approximation, accurate to full double precision for p in (0, 1).
double normal_quantile(double p);

// xoshiro256++ with SplitMix64 seeding. One instance per logical stream;
// all draws in this project flow through a single uniform per variate so
// distributions with the same key are comonotonically coupled.
class Stream {
 public:
  explicit Stream(std::uint64_t key) noexcept {
    std::uint64_t x = key;
    for (auto& word : state_) word = mix64(x++);
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Strictly inside (0,1): (k + 1/2) * 2^-53, symmetric around 1/2.
  double uniform01() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return normal_quantile(uniform01()); }

  double rademacher() noexcept { return uniform01() < 0.5 ? -1.0 : 1.0; }

  // Uniform on [-sqrt(3), sqrt(3)]: mean 0, variance 1.
  double uniform_sym() noexcept {
    return 1.7320508075688772 * (2.0 * uniform01() - 1.0);
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> state_{};
};

}  // namespace ridgelim::rng
