#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace robustrl {

// Deterministic random numbers with explicitly derivable streams.
//
// Standard-library distributions are implementation defined, so everything
// here is spelled out: xoshiro256++ for bits, splitmix64 for seeding and
// stream derivation, Box-Muller for normals. Identical seeds give identical
// sequences on every platform with IEEE doubles.

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Child stream seed from a master seed and a domain label. Used everywhere a
// run splits randomness (weight init, per-lane action noise, per-cell
// evaluation episodes, ...) so that subsystems never share a stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view domain) {
  std::uint64_t s = master ^ fnv1a64(domain);
  splitmix64_next(s);
  return splitmix64_next(s);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view domain,
                                 std::uint64_t index) {
  std::uint64_t s = master ^ fnv1a64(domain);
  s += 0x632BE59BD9B4E019ULL * (index + 1);
  splitmix64_next(s);
  return splitmix64_next(s);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64_next(sm);
  }

  std::uint64_t next_u64() {
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

  // Uniform in [0, 1), 53 bits of mantissa.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Box-Muller. Draws a fresh pair of uniforms per call and discards the
  // second variate; slower than caching but keeps the stream position a pure
  // function of the call count.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(2.0 * kPi * u2);
  }

  std::array<std::uint64_t, 4> state() const { return state_; }
  void set_state(const std::array<std::uint64_t, 4>& s) { state_ = s; }

 private:
  static constexpr double kPi = 3.14159265358979323846;

  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace robustrl
