#pragma once

#include <cstdint>
#include <random>

namespace care {

// Reproducible random stream keyed by (seed, stream_id). The engine is
// std::mt19937_64 seeded through std::seed_seq with the four 32-bit halves of
// the key; both are fully specified by the standard, and the variates below
// are computed here rather than through the implementation-defined
// <random> distributions, so sequences agree across platforms.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  // Standard normal (Box-Muller, one variate per call).
  double normal();
  bool bernoulli(double p);
  // Sum of `trials` Bernoulli(p) draws.
  std::int64_t binomial(std::int64_t trials, double p);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

RngStream rng_stream(std::uint64_t seed, std::uint64_t stream_id);

// SplitMix64 finalizer; used to derive stream ids from structured keys.
std::uint64_t mix64(std::uint64_t x);

}  // namespace care
