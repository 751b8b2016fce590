#include "frogpred/bitpred.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "frogpred/error.hpp"
#include "frogpred/rng.hpp"

namespace frogpred {

const char* to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::correct: return "correct";
    case Verdict::incorrect: return "incorrect";
    case Verdict::none: return "none";
  }
  return "?";
}

CompositionParams KPolicy::params(const Rational& eps, const Rational& gamma) const {
  return CompositionParams::make(eps, gamma, fixed, C);
}

std::string KPolicy::describe() const {
  if (fixed) return "fixed:" + std::to_string(*fixed);
  return "C=" + to_compact_string(C);
}

CompositionParams two_sided_params(const Rational& delta, const KPolicy& policy) {
  if (delta <= 0 || delta >= 1) throw InvalidArgument("delta must lie in (0,1)");
  return policy.params(delta / 4, delta / 4);
}

TwoSidedPredictor::TwoSidedPredictor(const Rational& delta, const KPolicy& policy, std::uint64_t R_max,
                                     std::uint64_t seed)
    : TwoSidedPredictor(two_sided_params(delta, policy), R_max, derive_seed(seed, 0), derive_seed(seed, 1)) {}

TwoSidedPredictor::TwoSidedPredictor(const CompositionParams& params, std::uint64_t R_max, std::uint64_t direct_seed,
                                     std::uint64_t complement_seed)
    : direct_(params, R_max, direct_seed), complement_(params, R_max, complement_seed) {}

std::optional<BitPrediction> TwoSidedPredictor::step(Bit bit) {
  if (finished_) return std::nullopt;
  ++consumed_;
  const bool direct = direct_.step(bit);
  const bool complement = complement_.step(static_cast<Bit>(1 - bit));
  if (direct || complement) {
    finished_ = true;
    return BitPrediction{consumed_, static_cast<Bit>(direct ? 0 : 1)};
  }
  if (direct_.exhausted() && complement_.exhausted()) finished_ = true;
  return std::nullopt;
}

Rational automaton_copy_delta(const Rational& eps, std::size_t states) {
  if (eps <= 0 || eps >= 1) throw InvalidArgument("eps must lie in (0,1)");
  return eps / (2 * Rational(states));
}

namespace {

std::optional<std::string> access_check(const Automaton& machine, const StateSet& bad, AccessPolicy access) {
  const Accessibility result = strongly_accessible(machine, bad);
  if (result.strongly_accessible) return std::nullopt;
  std::string message = "B is not strongly accessible: state " + std::to_string(*result.witness) +
                        " is reachable from the start but cannot reach B";
  if (access == AccessPolicy::refuse) throw RefusalError(message);
  return message;
}

}  // namespace

AutomatonPredictor::AutomatonPredictor(Automaton machine, const StateSet& bad, const Rational& eps,
                                       const KPolicy& policy, std::uint64_t R_max, std::uint64_t seed,
                                       AccessPolicy access)
    : machine_(std::move(machine)), state_(machine_.start()) {
  warning_ = access_check(machine_, bad, access);
  const CompositionParams params = two_sided_params(automaton_copy_delta(eps, machine_.size()), policy);
  copies_.reserve(machine_.size());
  for (std::size_t j = 0; j < machine_.size(); ++j) {
    copies_.emplace_back(params, R_max, derive_seed(seed, 2 * j), derive_seed(seed, 2 * j + 1));
  }
  pending_.resize(machine_.size());
  routed_.resize(machine_.size());
}

std::optional<BitPrediction> AutomatonPredictor::step(Bit bit) {
  if (finished_) return std::nullopt;
  ++time_;
  const auto from = state_;
  routed_[from - 1].push_back(bit);
  auto& copy = copies_[from - 1];
  if (!copy.finished()) {
    if (auto inner = copy.step(bit)) pending_[from - 1] = inner->bit;
  }
  state_ = machine_.next(from, bit);
  if (const auto& commit = pending_[state_ - 1]) {
    finished_ = true;
    return BitPrediction{time_, *commit};
  }
  return std::nullopt;
}

std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1 + z2 / n;
  const double center = (phat + z2 / (2 * n)) / denom;
  const double half = z * std::sqrt(phat * (1 - phat) / n + z2 / (4 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

namespace {

Verdict score(const std::optional<BitPrediction>& prediction, const BitVector& prefix) {
  if (!prediction || prediction->time + 1 > prefix.size()) return Verdict::none;
  return prefix[prediction->time] == prediction->bit ? Verdict::correct : Verdict::incorrect;
}

void tally(BitPredStats& stats) {
  for (const auto& rec : stats.records) {
    switch (rec.verdict) {
      case Verdict::correct: ++stats.correct; break;
      case Verdict::incorrect: ++stats.incorrect; break;
      case Verdict::none: ++stats.none; break;
    }
  }
  std::tie(stats.correct_low, stats.correct_high) = wilson_interval(stats.correct, stats.trials);
}

void check_trials(std::uint64_t horizon, std::uint64_t trials) {
  if (horizon == 0) throw InvalidArgument("horizon must be at least 1");
  if (trials == 0) throw InvalidArgument("trials must be at least 1");
}

}  // namespace

BitPredStats evaluate(const PredictorFactory& factory, const BitStream& stream, std::uint64_t horizon,
                      std::uint64_t trials, std::uint64_t seed, unsigned threads) {
  check_trials(horizon, trials);
  const BitVector prefix = stream.prefix(horizon);
  BitPredStats stats;
  stats.horizon = horizon;
  stats.trials = trials;
  stats.records.resize(trials);

  auto run_range = [&](std::uint64_t first, std::uint64_t last) {
    for (std::uint64_t k = first; k < last; ++k) {
      TrialRecord& rec = stats.records[k];
      rec.seed = derive_seed(seed, k);
      auto predictor = factory(rec.seed);
      for (std::uint64_t t = 0; t < horizon && !predictor->finished(); ++t) {
        if (auto p = predictor->step(prefix[t])) {
          rec.prediction = p;
          break;
        }
      }
      rec.verdict = score(rec.prediction, prefix);
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, trials));
  if (threads <= 1) {
    run_range(0, trials);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    {
      std::vector<std::jthread> pool;
      const std::uint64_t chunk = (trials + threads - 1) / threads;
      for (unsigned w = 0; w < threads; ++w) {
        const std::uint64_t first = std::min(trials, w * chunk);
        const std::uint64_t last = std::min(trials, first + chunk);
        pool.emplace_back([&, w, first, last] {
          try {
            run_range(first, last);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  tally(stats);
  return stats;
}

namespace {

/// heights[g] = stack height right after routed bit g inside its interval.
std::vector<std::uint32_t> height_table(const BitVector& bits, bool complement, const CompositionParams& params,
                                        std::uint64_t R_max) {
  std::vector<std::uint32_t> heights(bits.size() + 1, 0);
  const std::uint64_t n = bits.size();
  for (std::uint64_t r = 1; r <= R_max; ++r) {
    const Interval iv = schedule(params.K, r);
    if (iv.start > n) break;
    std::uint64_t h = 0;
    for (std::uint64_t g = iv.start; g <= std::min(iv.end, n); ++g) {
      const Bit b = complement ? static_cast<Bit>(1 - bits[g - 1]) : bits[g - 1];
      h = next_height(h, b, params.threshold);
      if (h > std::numeric_limits<std::uint32_t>::max()) throw CapacityError("stack height exceeds the table range");
      heights[g] = static_cast<std::uint32_t>(h);
    }
  }
  return heights;
}

/// Number of routed bits after which a FrogRunner with this seed fires, if it
/// does so within the first n bits.
std::optional<std::uint64_t> fire_count(const std::vector<std::uint32_t>& heights, const CompositionParams& params,
                                        std::uint64_t R_max, std::uint64_t seed) {
  const std::uint64_t n = heights.size() - 1;
  SeededRng rng(seed);
  for (std::uint64_t r = 1; r <= R_max; ++r) {
    const Interval iv = schedule(params.K, r);
    if (iv.start - 1 >= n) return std::nullopt;
    const std::uint64_t length = iv.length();
    check_capacity(params.threshold, length);
    const std::uint64_t t_star = 1 + rng.uniform_below(length);
    const std::uint64_t count = iv.start - 1 + t_star - 1;
    if (count > n) return std::nullopt;
    const std::uint64_t h = t_star == 1 ? 0 : heights[count];
    if (rng.bernoulli(h, params.threshold.d * length)) return count;
  }
  return std::nullopt;
}

}  // namespace

BitPredStats evaluate_automaton_fast(const Automaton& machine, const StateSet& bad, const Rational& eps,
                                     const KPolicy& policy, std::uint64_t R_max, const BitStream& stream,
                                     std::uint64_t horizon, std::uint64_t trials, std::uint64_t seed,
                                     AccessPolicy access) {
  check_trials(horizon, trials);
  if (R_max == 0) throw InvalidArgument("R_max must be at least 1");
  (void)access_check(machine, bad, access);
  const CompositionParams params = two_sided_params(automaton_copy_delta(eps, machine.size()), policy);
  const BitVector prefix = stream.prefix(horizon);
  const RunTrace trace = run_trace(machine, {}, prefix);

  BitPredStats stats;
  stats.horizon = horizon;
  stats.trials = trials;
  stats.records.resize(trials);
  for (std::uint64_t k = 0; k < trials; ++k) stats.records[k].seed = derive_seed(seed, k);

  for (Automaton::State j = 1; j <= machine.size(); ++j) {
    const BitVector routed = subsequence(machine, j, prefix);
    if (routed.empty()) continue;
    std::vector<std::optional<std::uint64_t>> direct(trials);
    {
      const auto table = height_table(routed, false, params, R_max);
      for (std::uint64_t k = 0; k < trials; ++k) {
        direct[k] = fire_count(table, params, R_max, derive_seed(stats.records[k].seed, 2 * (j - 1)));
      }
    }
    const auto table = height_table(routed, true, params, R_max);
    const auto& visits = trace.visits[j - 1];
    for (std::uint64_t k = 0; k < trials; ++k) {
      const auto complement = fire_count(table, params, R_max, derive_seed(stats.records[k].seed, 2 * (j - 1) + 1));
      std::optional<std::uint64_t> count;
      Bit bit = 0;
      if (direct[k] && (!complement || *direct[k] <= *complement)) {
        count = direct[k];
      } else if (complement) {
        count = complement;
        bit = 1;
      }
      if (!count || *count >= visits.size()) continue;
      const std::uint64_t time = visits[*count];
      auto& rec = stats.records[k];
      if (!rec.prediction || time < rec.prediction->time) rec.prediction = BitPrediction{time, bit};
    }
  }
  for (auto& rec : stats.records) rec.verdict = score(rec.prediction, prefix);
  tally(stats);
  return stats;
}

AutomatonAccount automaton_account(const Automaton& machine, const Rational& eps, const KPolicy& policy,
                                   std::uint64_t R_max, const BitStream& stream, std::uint64_t horizon) {
  const CompositionParams params = two_sided_params(automaton_copy_delta(eps, machine.size()), policy);
  const BitVector prefix = stream.prefix(horizon);
  AutomatonAccount account;
  account.silent_mass = 1;
  for (Automaton::State j = 1; j <= machine.size(); ++j) {
    CopyAccount copy;
    copy.state = j;
    const BitVector bits = subsequence(machine, j, prefix);
    const BitStream routed = from_finite(bits.empty() ? BitVector{0} : bits, 0);
    copy.routed_bits = bits.size();
    copy.direct = composed_exact(routed, params, R_max, copy.routed_bits);
    copy.complement = composed_exact(negate(routed), params, R_max, copy.routed_bits);
    account.death_bound += copy.direct.death_total + copy.complement.death_total;
    account.silent_mass *= copy.direct.residual * copy.complement.residual;
    account.copies.push_back(std::move(copy));
  }
  return account;
}

}  // namespace frogpred
