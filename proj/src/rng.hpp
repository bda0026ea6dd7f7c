#pragma once

#include <cmath>
#include <cstdint>

namespace adaptsurv {

// Counter-based stream derivation on top of xoshiro256++. A root seed is
// split into independent streams via splitmix64 over (root, domain, index),
// so per-replicate and per-subject streams can be created in any order and
// in parallel without touching each other. The whole scheme is self-contained
// to keep output byte-identical across standard library implementations.

inline uint64_t splitmix64_next(uint64_t& state) {
  uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Stream domains used by the simulator and the Monte Carlo harness.
enum class StreamDomain : uint64_t {
  replicate = 1,
  entry = 2,
  allocation = 3,
  covariate = 4,
  event = 5,
  censor = 6,
  generic = 7,
};

inline uint64_t derive_seed(uint64_t root, StreamDomain domain, uint64_t index) {
  uint64_t s = root;
  (void)splitmix64_next(s);
  s ^= 0x6A09E667F3BCC909ULL * (static_cast<uint64_t>(domain) + 1);
  (void)splitmix64_next(s);
  s ^= 0xBB67AE8584CAA73BULL * (index + 1);
  uint64_t t = s;
  return splitmix64_next(t);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t s = seed;
    for (auto& w : state_) w = splitmix64_next(s);
  }

  static Rng stream(uint64_t root, StreamDomain domain, uint64_t index) {
    return Rng(derive_seed(root, domain, index));
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1); redraws the (probability 2^-53) exact zero.
  double uniform_pos() {
    double u = uniform();
    while (u == 0.0) u = uniform();
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Strictly positive exponential draw.
  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t state_[4];
};

}  // namespace adaptsurv
