#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "frogpred/automaton.hpp"
#include "frogpred/frog_composed.hpp"
#include "frogpred/rational.hpp"
#include "frogpred/streams.hpp"

namespace frogpred {

/// Prediction of bit time+1, made after seeing bits 1..time.
struct BitPrediction {
  std::uint64_t time = 0;
  Bit bit = 0;

  bool operator==(const BitPrediction&) const = default;
};

enum class Verdict { correct, incorrect, none };
const char* to_string(Verdict verdict);

/// Streaming bit-prediction strategy. Emits at most one prediction; after that
/// every step returns nothing.
class BitPredictor {
 public:
  virtual ~BitPredictor() = default;
  virtual std::optional<BitPrediction> step(Bit bit) = 0;
  virtual bool finished() const = 0;
};

/// How the inner composed strategies pick K: a fixed value, or default_K with constant C.
struct KPolicy {
  std::optional<std::uint64_t> fixed;
  Rational C = Rational(CompositionParams::kDefaultC);

  static KPolicy fixed_K(std::uint64_t K) { return KPolicy{K, Rational(CompositionParams::kDefaultC)}; }
  static KPolicy scaled(const Rational& C) { return KPolicy{std::nullopt, C}; }

  CompositionParams params(const Rational& eps, const Rational& gamma) const;
  std::string describe() const;
};

/// Parameters of the composed strategy used by a two-sided predictor with threshold delta:
/// eps = gamma = delta/4.
CompositionParams two_sided_params(const Rational& delta, const KPolicy& policy);

/// Runs the composed strategy on b and an independent copy on the complement.
/// b-copy fires: predict 0. Complement copy fires: predict 1. Both at once: predict 0.
class TwoSidedPredictor final : public BitPredictor {
 public:
  /// Sub-copy seeds derive_seed(seed, 0) and derive_seed(seed, 1).
  TwoSidedPredictor(const Rational& delta, const KPolicy& policy, std::uint64_t R_max, std::uint64_t seed);
  TwoSidedPredictor(const CompositionParams& params, std::uint64_t R_max, std::uint64_t direct_seed,
                    std::uint64_t complement_seed);

  std::optional<BitPrediction> step(Bit bit) override;
  bool finished() const override { return finished_; }
  std::uint64_t consumed() const noexcept { return consumed_; }

 private:
  FrogRunner direct_;
  FrogRunner complement_;
  std::uint64_t consumed_ = 0;
  bool finished_ = false;
};

enum class AccessPolicy { refuse, warn };

/// l copies of the two-sided predictor with delta = eps/(2l), one per state.
/// Bit x_t is routed to the copy of the state before it; a copy's prediction is
/// committed at the next visit to its state. Copy j (1-based) uses sub-copy
/// seeds derive_seed(seed, 2(j-1)) and derive_seed(seed, 2(j-1)+1).
class AutomatonPredictor final : public BitPredictor {
 public:
  /// Throws RefusalError when B is not strongly accessible and the policy is refuse.
  AutomatonPredictor(Automaton machine, const StateSet& bad, const Rational& eps, const KPolicy& policy,
                     std::uint64_t R_max, std::uint64_t seed, AccessPolicy access = AccessPolicy::refuse);

  std::optional<BitPrediction> step(Bit bit) override;
  bool finished() const override { return finished_; }

  /// Set when the automaton failed the accessibility check under AccessPolicy::warn.
  const std::optional<std::string>& warning() const noexcept { return warning_; }
  /// Bits routed so far to each state's copy, in visit order.
  const std::vector<BitVector>& routed() const noexcept { return routed_; }

 private:
  Automaton machine_;
  std::vector<TwoSidedPredictor> copies_;
  std::vector<std::optional<Bit>> pending_;
  std::vector<BitVector> routed_;
  Automaton::State state_;
  std::uint64_t time_ = 0;
  bool finished_ = false;
  std::optional<std::string> warning_;
};

/// delta used by each copy: eps / (2 l).
Rational automaton_copy_delta(const Rational& eps, std::size_t states);

struct TrialRecord {
  std::uint64_t seed = 0;
  std::optional<BitPrediction> prediction;
  Verdict verdict = Verdict::none;
};

struct BitPredStats {
  std::uint64_t horizon = 0;
  std::uint64_t trials = 0;
  std::uint64_t correct = 0;
  std::uint64_t incorrect = 0;
  std::uint64_t none = 0;
  /// 95% Wilson score interval on the correct rate.
  double correct_low = 0;
  double correct_high = 0;
  std::vector<TrialRecord> records;
};

/// Wilson score interval for `successes` out of `trials` at normal quantile z.
std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = 1.959963984540054);

using PredictorFactory = std::function<std::unique_ptr<BitPredictor>(std::uint64_t seed)>;

/// Plays `trials` independent predictors (trial k seeded with derive_seed(seed, k))
/// over bits 1..horizon. A prediction at time t is scored only when t+1 <= horizon.
BitPredStats evaluate(const PredictorFactory& factory, const BitStream& stream, std::uint64_t horizon,
                      std::uint64_t trials, std::uint64_t seed, unsigned threads = 0);

/// Same results as evaluate() with AutomatonPredictor trials, trial for trial,
/// computed from per-copy height tables instead of bit-by-bit replay.
BitPredStats evaluate_automaton_fast(const Automaton& machine, const StateSet& bad, const Rational& eps,
                                     const KPolicy& policy, std::uint64_t R_max, const BitStream& stream,
                                     std::uint64_t horizon, std::uint64_t trials, std::uint64_t seed,
                                     AccessPolicy access = AccessPolicy::refuse);

/// Exact per-copy accounting for an automaton predictor on a fixed prefix.
struct CopyAccount {
  Automaton::State state = 0;
  /// Routed bits available to this copy inside the horizon.
  std::uint64_t routed_bits = 0;
  CompositeReport direct;
  CompositeReport complement;
};

struct AutomatonAccount {
  std::vector<CopyAccount> copies;
  /// Sum of every sub-copy's death mass: bounds the probability of an incorrect prediction.
  Rational death_bound;
  /// Product of every sub-copy's residual: probability that no copy fires in the horizon.
  Rational silent_mass;
};

AutomatonAccount automaton_account(const Automaton& machine, const Rational& eps, const KPolicy& policy,
                                   std::uint64_t R_max, const BitStream& stream, std::uint64_t horizon);

}  // namespace frogpred
