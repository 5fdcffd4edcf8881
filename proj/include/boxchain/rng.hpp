#pragma once

// Deterministic randomness for the whole project. Every consumer gets a
// stream keyed by (run seed, label); streams are counter-based SplitMix64
// sequences, so identical (seed, label) pairs replay identical draws on any
// platform and derived streams can be handed to worker threads safely.
//
// std::uniform_real_distribution and friends are intentionally not used:
// their output is not pinned by the standard, and reruns must be
// byte-identical.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace boxchain {

namespace detail {

inline constexpr std::uint64_t golden_gamma = 0x9e3779b97f4a7c15ull;

// Stafford mix13 finalizer, same avalanche core as SplitMix64.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z;
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace detail

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view label)
      : key_(detail::mix64(seed ^ detail::mix64(detail::fnv1a64(label)))) {}

  // Cheap arithmetic split, e.g. one substream per Monte Carlo trial.
  RngStream derived(std::uint64_t k) const {
    return RngStream(detail::mix64(key_ + detail::mix64(k + 1)));
  }

  std::uint64_t next_u64() { return detail::mix64(key_ + (++counter_) * detail::golden_gamma); }

  // Uniform on [0, 1) with 53 random bits; never returns 1.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on {0, ..., n-1}, rejection-sampled to avoid modulo bias.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_int: n must be positive");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x > limit);
    return x % n;
  }

  // Exponential with the given rate; rate 0 yields +infinity (no event).
  double exponential(double rate) {
    if (rate < 0) throw std::invalid_argument("exponential: negative rate");
    if (rate == 0) return std::numeric_limits<double>::infinity();
    return -std::log1p(-uniform01()) / rate;
  }

  // Standard normal via Marsaglia's polar method; caches the pair partner.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    cached_ = v * m;
    have_cached_ = true;
    return u * m;
  }

  // Gamma(shape, rate) via Marsaglia-Tsang, boosted for shape < 1.
  double gamma(double shape, double rate) {
    if (shape <= 0 || rate <= 0)
      throw std::invalid_argument("gamma: shape and rate must be positive");
    if (shape < 1.0) {
      const double u = uniform01();
      return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform01();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
  }

  // Poisson count. Knuth's product method for moderate means; large means
  // split exactly by superposition to keep the product away from underflow.
  std::uint64_t poisson(double mu) {
    if (mu < 0) throw std::invalid_argument("poisson: negative mean");
    if (mu == 0) return 0;
    if (mu > 400.0) return poisson(mu / 2) + poisson(mu - mu / 2);
    const double limit = std::exp(-mu);
    std::uint64_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform01();
    } while (p > limit);
    return k - 1;
  }

 private:
  explicit RngStream(std::uint64_t key) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace boxchain
