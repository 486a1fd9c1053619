#pragma once

// Seeded randomness. Every stream is derived from (seed, tags...) so that
// parallel workers draw the same numbers whatever the schedule.

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace jetcalc {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t s = splitmix64(seed);
  for (auto t : tags) s = splitmix64(s ^ splitmix64(t + 0x632be59bd9b4e019ULL));
  return s;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) : engine_(derive_seed(seed, tags)) {}

  /// Uniform in [0, 1) with 53 random bits; identical on every platform.
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

  std::vector<double> point(int n, double lo, double hi) {
    std::vector<double> x(static_cast<std::size_t>(n));
    for (auto& v : x) v = uniform(lo, hi);
    return x;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace jetcalc
