#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace fedban {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based stream splitting: absorbing the same words always yields the
// same 64-bit seed, independent of execution order.
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (std::uint64_t w : words) {
    std::uint64_t s = w;
    h ^= splitmix64_next(s) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    std::uint64_t t = h;
    h = splitmix64_next(t);
  }
  return h;
}

// xoshiro256** with a splitmix-expanded seed. Satisfies
// UniformRandomBitGenerator so the <random> distributions work on top.
class Rng {
 public:
  using result_type = std::uint64_t;

  Rng() : Rng(0) {}
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : s_) w = splitmix64_next(s);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type(0); }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double uniform() { return double((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Marsaglia polar method; caches the spare deviate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  // Uniform integer in [0, n); n stays far below 2^53 here.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * double(n)) % n;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Domain tags keep unrelated streams disjoint even for equal indices.
enum class StreamTag : std::uint64_t {
  kRun = 1,
  kTheta = 2,
  kDecision = 3,
  kTree = 4,
  kTreeNode = 5,
  kNetwork = 6,
};

inline Rng make_stream(std::uint64_t master, StreamTag tag, std::uint64_t a = 0,
                       std::uint64_t b = 0) {
  return Rng(mix_seed({master, static_cast<std::uint64_t>(tag), a, b}));
}

}  // namespace fedban
