#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace bfnas {

// SplitMix64 step; also the workhorse for mixing seed components together.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t state = 0x8e2a4bd713fca5d1ULL;
  std::uint64_t acc = 0;
  for (std::uint64_t p : parts) {
    state ^= p;
    acc = splitmix64(state) ^ (acc * 0x2545f4914f6cdd1dULL + 0x9e3779b97f4a7c15ULL);
  }
  return acc;
}

// FNV-1a over a short string, so seed derivations read as
// mix_seed({master, seed_tag("lhs")}).
constexpr std::uint64_t seed_tag(const char* s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  while (*s != '\0') {
    h ^= static_cast<unsigned char>(*s++);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Deterministic random stream. All randomness in the library goes through
// this wrapper rather than std::*_distribution, whose output is
// implementation-defined; results are then reproducible bit-for-bit for a
// given seed.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n) via multiply-shift; n must be positive.
  int uniform_int(int n) {
    return static_cast<int>(
        (static_cast<unsigned __int128>(next_u64()) * static_cast<std::uint64_t>(n)) >> 64);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      auto j = static_cast<std::size_t>(uniform_int(static_cast<int>(i)));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bfnas
