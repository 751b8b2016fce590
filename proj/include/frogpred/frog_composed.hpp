#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "frogpred/frog_core.hpp"
#include "frogpred/rational.hpp"
#include "frogpred/rng.hpp"
#include "frogpred/streams.hpp"

namespace frogpred {

struct CompositionParams {
  Rational eps;
  Rational gamma;
  /// eps + gamma/3; carried for reports only.
  Rational eps1;
  /// eps + 2 gamma/3; the threshold every interval strategy runs with.
  Rational eps2;
  std::uint64_t K = 2;
  RationalThreshold threshold;

  static constexpr std::uint64_t kDefaultC = 64;

  /// Validates eps in (0,1), gamma > 0, eps + gamma < 1. K defaults to default_K(eps, gamma, C).
  static CompositionParams make(const Rational& eps, const Rational& gamma, std::optional<std::uint64_t> K = std::nullopt,
                                const Rational& C = Rational(kDefaultC));
};

/// max(2, ceil(C * eps2 / (gamma * (1 - eps2)))).
std::uint64_t default_K(const Rational& eps, const Rational& gamma, const Rational& C = Rational(CompositionParams::kDefaultC));

/// Inclusive stream indices of the r-th interval, |I_r| = r^2 K.
struct Interval {
  std::uint64_t start = 0;
  std::uint64_t end = 0;
  std::uint64_t length() const { return end - start + 1; }
};

Interval schedule(std::uint64_t K, std::uint64_t r);

struct IntervalRecord {
  std::uint64_t r = 0;
  Interval interval;
  /// Steps of the interval that were evaluated; < length only when a horizon cuts it.
  std::uint64_t steps = 0;
  /// P_r: probability of reaching this interval without an attempt.
  Rational reach;
  /// Outcome of the interval strategy on its own window (unweighted).
  OutcomeProbabilities outcome;
};

struct CompositeReport {
  CompositionParams params;
  std::vector<IntervalRecord> intervals;
  Rational success_total;
  Rational death_total;
  /// P_{R+1}: mass that has not attempted by the truncation point.
  Rational residual;
  /// Step limit when the evaluation was cut at a fixed horizon.
  std::optional<std::uint64_t> horizon;
};

/// Incremental exact evaluation, one interval per advance().
class ComposedEvaluator {
 public:
  ComposedEvaluator(BitStream stream, CompositionParams params, std::optional<std::uint64_t> horizon = std::nullopt);

  /// Evaluates the next interval. Returns false (and does nothing) once the
  /// horizon has been fully covered.
  bool advance();

  const CompositeReport& report() const noexcept { return report_; }
  std::uint64_t intervals_done() const noexcept { return report_.intervals.size(); }

 private:
  BitStream stream_;
  CompositeReport report_;
};

/// Exact totals for R_max intervals (or fewer, when `horizon` ends first).
/// Throws CapacityError before any interval would overflow d * r^2 K.
CompositeReport composed_exact(const BitStream& stream, const CompositionParams& params, std::uint64_t R_max,
                               std::optional<std::uint64_t> horizon = std::nullopt);

/// Adds intervals until the residual drops below `target` or `R_cap` is hit.
CompositeReport composed_until_residual(const BitStream& stream, const CompositionParams& params,
                                        const Rational& target, std::uint64_t R_cap);

/// success_total + death_total + residual == 1 and the totals equal the
/// reach-weighted sums of the per-interval outcomes.
bool consistent(const CompositeReport& report);

/// One sampled play of the composed strategy. Per interval: t* first, then X.
PlayOutcome sample_composed(const BitStream& stream, const CompositionParams& params, std::uint64_t seed,
                            std::uint64_t R_max);

/// Causal, bit-at-a-time form of the composed strategy. Consumes the same
/// random words in the same order as sample_composed.
class FrogRunner {
 public:
  FrogRunner(const CompositionParams& params, std::uint64_t R_max, std::uint64_t seed);

  /// Consumes the next bit. Returns true when the strategy decides to cross on
  /// the step after this one; from then on the runner is finished.
  bool step(Bit bit);

  bool fired() const noexcept { return fired_; }
  bool exhausted() const noexcept { return exhausted_; }
  std::uint64_t consumed() const noexcept { return consumed_; }

 private:
  void begin_interval();
  void decide();

  RationalThreshold threshold_;
  std::uint64_t base_K_;
  std::uint64_t R_max_;
  SeededRng rng_;
  std::uint64_t r_ = 0;
  std::uint64_t length_ = 0;
  std::uint64_t position_ = 0;
  std::uint64_t t_star_ = 0;
  std::uint64_t height_ = 0;
  std::uint64_t consumed_ = 0;
  bool fired_ = false;
  bool exhausted_ = false;
};

}  // namespace frogpred
