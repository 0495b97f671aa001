#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace pidr {

/// Counter-style pseudo-random stream built on SplitMix64.
///
/// Every consumer derives its own stream from (seed, tag[, index]) so that
/// shuffling, dropout, collocation draws and weight init never share state.
/// Streams are reproducible across platforms and trivially serializable
/// (the state is a single integer), which keeps checkpoint resume exact.
class RngStream {
 public:
  explicit RngStream(std::uint64_t state) : state_(state) {}

  static std::uint64_t hash_tag(std::uint64_t seed, std::string_view tag,
                                std::uint64_t index = 0) {
    std::uint64_t h = seed ^ 0x9e3779b97f4a7c15ULL;
    for (char c : tag) {
      h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
      h *= 0x100000001b3ULL;
    }
    h ^= index + 0x632be59bd9b4e019ULL;
    h = mix(h);
    return h;
  }

  static RngStream derive(std::uint64_t seed, std::string_view tag,
                          std::uint64_t index = 0) {
    return RngStream(hash_tag(seed, tag, index));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t next_below(std::uint64_t n) {
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

  /// Standard normal draw via Box-Muller. Consumes exactly two uniforms per
  /// call (no caching) so the stream position is a pure function of the
  /// number of calls.
  double next_normal() {
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t state() const { return state_; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
};

}  // namespace pidr
