#pragma once

#include <cstdint>
#include <random>

namespace adaptsim {

// SplitMix64 finalizer, used to derive independent seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Portable random stream built on std::mt19937_64.
///
/// The engine's output sequence is fixed by the standard; the conversions to
/// doubles and bounded integers are done here rather than through the
/// <random> distributions, whose algorithms are implementation defined.
/// Child streams are derived with `split(id)`: the child seed is
/// mix64(mix64(seed) ^ mix64(id + 1)), so (seed, id) fully determines it.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(mix64(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  Rng split(std::uint64_t stream_id) const {
    return Rng(mix64(mix64(seed_) ^ mix64(stream_id + 1)));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace adaptsim
