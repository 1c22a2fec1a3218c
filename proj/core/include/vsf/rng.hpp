#pragma once

#include <cmath>
#include <cstdint>

namespace vsf {

/// SplitMix64 counter-based generator. Per-item streams are derived with
/// stream(seed, index), so generation order is independent of call order.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_u64(std::uint64_t n) {
    // modulo bias is negligible for n << 2^64
    return next() % n;
  }

  /// Standard normal via Box-Muller (no cached spare; one draw = two uniforms).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    // avoid log(0)
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Decorrelated per-index stream for a given root seed.
  static SplitMix64 stream(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 g(seed ^ (index * 0xA24BAED4963EE407ULL + 0x9FB21C651E98DF25ULL));
    g.next();  // burn one output to mix the state
    return g;
  }

 private:
  std::uint64_t state_;
};

}  // namespace vsf
