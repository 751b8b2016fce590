#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "frogpred/rational.hpp"
#include "frogpred/streams.hpp"

namespace frogpred {

/// delta = p/d with 0 < p < d, q = d - p. Not necessarily in lowest terms.
struct RationalThreshold {
  std::uint64_t p = 1;
  std::uint64_t d = 2;
  std::uint64_t q = 1;

  static RationalThreshold from_pd(std::uint64_t p, std::uint64_t d);
  /// Lowest terms of a rational in (0,1).
  static RationalThreshold from_rational(const Rational& delta);

  Rational delta() const { return Rational(BigInt(p), BigInt(d)); }
};

/// One stack update: +p chips on a 0, -q chips (floored at 0) on a 1.
constexpr std::uint64_t next_height(std::uint64_t height, Bit bit, const RationalThreshold& t) noexcept {
  if (bit == 0) return height + t.p;
  return height > t.q ? height - t.q : 0;
}

/// H_0 .. H_{K-1}.
struct StackTrace {
  std::vector<std::uint64_t> heights;
};

/// pi(1..K) and pi(infinity) of a finite-horizon strategy.
struct StepDistribution {
  std::uint64_t horizon = 0;
  std::vector<Rational> step_probs;
  Rational p_infty;
};

struct OutcomeProbabilities {
  Rational success;
  Rational death;
  Rational wait;
};

enum class PlayResult { crossed_safely, squashed, waited };

struct PlayOutcome {
  PlayResult result = PlayResult::waited;
  /// Step of the crossing attempt (window-relative for finite play, stream
  /// index for composed play); 0 when waited.
  std::uint64_t t = 0;
  /// Composed play only: stopped because R_max intervals were exhausted.
  bool truncated = false;

  bool operator==(const PlayOutcome&) const = default;
};

const char* to_string(PlayResult result);

/// Heights after processing each bit of the K-1 decision bits. Needs K >= 2.
StackTrace stack_heights(std::span<const Bit> prefix, const RationalThreshold& threshold);

/// Exact crossing-time distribution of the chip-stack strategy: pi(i) = H_{i-1} / (d K^2).
/// `prefix` holds b_1..b_{K-1}; b_K is never read by the strategy.
StepDistribution chip_stack_distribution(std::span<const Bit> prefix, const RationalThreshold& threshold,
                                         std::uint64_t K);

/// Scores a distribution against the full window b_1..b_K.
OutcomeProbabilities outcome_probabilities(const StepDistribution& dist, std::span<const Bit> bits);

struct BoundReport {
  enum class Status { pass, fail, not_applicable };

  OutcomeProbabilities outcome;
  Rational delta;
  /// Density of b_1..b_{K-1}.
  Rational delta_prime;
  Rational p_infty;
  /// 1 - (delta - delta')^2 / (8 delta)
  Rational wait_bound;
  Status wait_status = Status::not_applicable;
  /// DP - (p/q) SP
  Rational death_excess;
  /// (p^2/q + 2p) / (dK)
  Rational death_excess_bound;
  bool death_excess_pass = false;
};

const char* to_string(BoundReport::Status status);

/// Evaluates the explicit-constant forms of the waiting bound (only when
/// delta' < delta) and the death-versus-success bound, both strict, on a window of K bits.
BoundReport lemma_bounds_check(std::span<const Bit> window, const RationalThreshold& threshold, std::uint64_t K);

/// Plays the chip-stack strategy once against bits offset+1 .. offset+K.
/// Draw order: t* uniform on [K] first, then X with P[X=1] = H_{t*-1}/(dK).
PlayOutcome sample_finite(const BitStream& stream, std::uint64_t offset, const RationalThreshold& threshold,
                          std::uint64_t K, std::uint64_t seed);

/// Integer form of a window's outcome: the sums of H_{t-1} over the first
/// `steps` steps, split by the value of b_t. Probabilities are these over dK^2.
struct WindowTally {
  std::uint64_t K = 0;
  std::uint64_t steps = 0;
  unsigned __int128 zero_mass = 0;
  unsigned __int128 one_mass = 0;
};

/// Streams bits offset+1 .. offset+steps; steps <= K.
WindowTally tally_window(const BitStream& stream, std::uint64_t offset, const RationalThreshold& threshold,
                         std::uint64_t K, std::uint64_t steps);

/// success = zero_mass/(dK^2), death = one_mass/(dK^2), wait = the rest
/// (including attempts after `steps` when the tally is truncated).
OutcomeProbabilities outcome_from_tally(const WindowTally& tally, const RationalThreshold& threshold);

/// Throws CapacityError unless d*K and p*K fit the signed 64-bit range.
void check_capacity(const RationalThreshold& threshold, std::uint64_t K);

}  // namespace frogpred
