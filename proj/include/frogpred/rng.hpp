#pragma once

#include <cstdint>
#include <random>

namespace frogpred {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed for `index` under `master`. Used for trial seeds and predictor copies.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(master ^ mix64(index ^ 0x6a09e667f3bcc909ULL));
}

/// Counter-mode word: a pure function of (seed, index, counter).
constexpr std::uint64_t hash_word(std::uint64_t seed, std::uint64_t index,
                                  std::uint64_t counter) noexcept {
  return mix64(derive_seed(seed, index) ^ mix64(counter + 0xbb67ae8584caa73bULL));
}

/// Sequential generator for sampled play. Wraps std::mt19937_64, whose output
/// sequence is fixed by the standard; all derived draws are exact integer
/// operations so results are identical across standard libraries.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on {0, ..., n-1}, exact (rejection below the largest multiple of n).
  std::uint64_t uniform_below(std::uint64_t n);

  /// Exact Bernoulli(numerator / denominator); requires numerator <= denominator.
  bool bernoulli(std::uint64_t numerator, std::uint64_t denominator) {
    return uniform_below(denominator) < numerator;
  }

 private:
  std::mt19937_64 engine_;
};

inline std::uint64_t SeededRng::uniform_below(std::uint64_t n) {
  // n == 0 is a caller bug; treat as the full range.
  if (n == 0) return next();
  const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
  for (;;) {
    const std::uint64_t word = next();
    if (word >= threshold) return word % n;
  }
}

}  // namespace frogpred
