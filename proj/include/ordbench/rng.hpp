#pragma once

// Seeded, platform-independent randomness for every stochastic component.
//
// The generator is PCG XSL-RR 128/64 (state 128 bits, output 64 bits) with
// the reference multiplier. All derived quantities are defined in terms of
// next_u64() so that a (seed, stream) pair reproduces the same draw sequence
// on any platform:
//   next_double(): (next_u64() >> 11) * 2^-53, uniform in [0, 1)
//   below(n):      unbiased rejection sampling on next_u64()
//   shuffle:       Fisher-Yates from the back, indices drawn with below()

#include <cstdint>
#include <string_view>
#include <vector>

namespace ordbench {

// SplitMix64 step; also used to derive substream seeds.
inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Order-sensitive 64-bit combiner for deriving substream seeds from a master
// seed plus arbitrary tags (sizes, rep indices, string ids).
inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return splitmix64(x);
}

// FNV-1a over bytes, for string tags (document ids, split names).
inline std::uint64_t hash_str(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Pcg64 {
 public:
  explicit Pcg64(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t s = seed;
    std::uint64_t lo = splitmix64(s);
    std::uint64_t hi = splitmix64(s);
    std::uint64_t st = stream;
    std::uint64_t inc_lo = splitmix64(st) | 1ULL;  // increment must be odd
    std::uint64_t inc_hi = splitmix64(st);
    state_ = (static_cast<u128>(hi) << 64) | lo;
    inc_ = (static_cast<u128>(inc_hi) << 64) | inc_lo;
    next_u64();
    next_u64();
  }

  std::uint64_t next_u64() {
    state_ = state_ * kMult + inc_;
    std::uint64_t xored = static_cast<std::uint64_t>(state_ >> 64) ^
                          static_cast<std::uint64_t>(state_);
    unsigned rot = static_cast<unsigned>(state_ >> 122);
    return (xored >> rot) | (xored << ((-rot) & 63u));
  }

  // Uniform in [0, 1), 53 random mantissa bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [0, bound); unbiased via rejection.
  std::uint64_t below(std::uint64_t bound) {
    std::uint64_t threshold = (-bound) % bound;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Identity permutation of size n shuffled in place.
  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    shuffle(p);
    return p;
  }

 private:
  using u128 = unsigned __int128;
  static constexpr u128 kMult =
      (static_cast<u128>(2549297995355413924ULL) << 64) | 4865540595714422341ULL;
  u128 state_;
  u128 inc_;
};

}  // namespace ordbench
