#include "frogpred/frog_core.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "frogpred/error.hpp"
#include "frogpred/rng.hpp"

namespace frogpred {

RationalThreshold RationalThreshold::from_pd(std::uint64_t p, std::uint64_t d) {
  if (p == 0 || p >= d) throw InvalidArgument("threshold needs 0 < p < d");
  return RationalThreshold{p, d, d - p};
}

RationalThreshold RationalThreshold::from_rational(const Rational& delta) {
  if (delta <= 0 || delta >= 1) throw InvalidArgument("threshold delta must lie in (0,1)");
  return from_pd(to_u64(numerator(delta), "threshold numerator"), to_u64(denominator(delta), "threshold denominator"));
}

const char* to_string(PlayResult result) {
  switch (result) {
    case PlayResult::crossed_safely: return "crossed_safely";
    case PlayResult::squashed: return "squashed";
    case PlayResult::waited: return "waited";
  }
  return "?";
}

const char* to_string(BoundReport::Status status) {
  switch (status) {
    case BoundReport::Status::pass: return "pass";
    case BoundReport::Status::fail: return "fail";
    case BoundReport::Status::not_applicable: return "not_applicable";
  }
  return "?";
}

void check_capacity(const RationalThreshold& threshold, std::uint64_t K) {
  constexpr auto kMax = static_cast<unsigned __int128>(std::numeric_limits<std::int64_t>::max());
  if (static_cast<unsigned __int128>(threshold.d) * K > kMax || static_cast<unsigned __int128>(threshold.p) * K > kMax) {
    throw CapacityError("d*K exceeds 2^63 (K = " + std::to_string(K) + ", d = " + std::to_string(threshold.d) + ")");
  }
}

StackTrace stack_heights(std::span<const Bit> prefix, const RationalThreshold& threshold) {
  if (prefix.empty()) throw InvalidArgument("stack_heights needs K >= 2 (a nonempty prefix)");
  check_capacity(threshold, prefix.size() + 1);
  StackTrace trace;
  trace.heights.reserve(prefix.size() + 1);
  std::uint64_t h = 0;
  trace.heights.push_back(h);
  for (Bit b : prefix) {
    h = next_height(h, b, threshold);
    trace.heights.push_back(h);
  }
  return trace;
}

StepDistribution chip_stack_distribution(std::span<const Bit> prefix, const RationalThreshold& threshold,
                                         std::uint64_t K) {
  if (K < 2) throw InvalidArgument("chip_stack_distribution needs K > 1");
  if (prefix.size() != K - 1) {
    throw InvalidArgument("prefix length " + std::to_string(prefix.size()) + " does not match K-1 = " +
                          std::to_string(K - 1));
  }
  const StackTrace trace = stack_heights(prefix, threshold);
  const BigInt denominator = BigInt(threshold.d) * K * K;

  StepDistribution dist;
  dist.horizon = K;
  dist.step_probs.reserve(K);
  unsigned __int128 mass = 0;
  for (std::uint64_t h : trace.heights) {
    dist.step_probs.emplace_back(BigInt(h), denominator);
    mass += h;
  }
  dist.p_infty = 1 - Rational(to_bigint(mass), denominator);
  return dist;
}

OutcomeProbabilities outcome_probabilities(const StepDistribution& dist, std::span<const Bit> bits) {
  if (bits.size() != dist.horizon) {
    throw InvalidArgument("window length " + std::to_string(bits.size()) + " does not match horizon " +
                          std::to_string(dist.horizon));
  }
  OutcomeProbabilities out;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    (bits[i] == 0 ? out.success : out.death) += dist.step_probs[i];
  }
  out.wait = dist.p_infty;
  return out;
}

BoundReport lemma_bounds_check(std::span<const Bit> window, const RationalThreshold& threshold, std::uint64_t K) {
  if (window.size() != K) throw InvalidArgument("lemma_bounds_check needs a window of exactly K bits");
  const auto prefix = window.first(K - 1);
  const StepDistribution dist = chip_stack_distribution(prefix, threshold, K);

  BoundReport report;
  report.outcome = outcome_probabilities(dist, window);
  report.delta = threshold.delta();
  const auto ones = std::count(prefix.begin(), prefix.end(), Bit{1});
  report.delta_prime = Rational(BigInt(ones), BigInt(K - 1));
  report.p_infty = dist.p_infty;

  const Rational gap = report.delta - report.delta_prime;
  report.wait_bound = 1 - gap * gap / (8 * report.delta);
  if (report.delta_prime < report.delta) {
    report.wait_status = report.p_infty < report.wait_bound ? BoundReport::Status::pass : BoundReport::Status::fail;
  }

  const Rational p(BigInt(threshold.p)), q(BigInt(threshold.q)), d(BigInt(threshold.d));
  report.death_excess = report.outcome.death - (p / q) * report.outcome.success;
  report.death_excess_bound = (p * p / q + 2 * p) / (d * K);
  report.death_excess_pass = report.death_excess < report.death_excess_bound;
  return report;
}

PlayOutcome sample_finite(const BitStream& stream, std::uint64_t offset, const RationalThreshold& threshold,
                          std::uint64_t K, std::uint64_t seed) {
  if (K < 2) throw InvalidArgument("sample_finite needs K > 1");
  check_capacity(threshold, K);
  SeededRng rng(seed);
  const std::uint64_t t_star = 1 + rng.uniform_below(K);
  std::uint64_t h = 0;
  if (t_star > 1) {
    const BitVector decision = stream.window(offset + 1, t_star - 1);
    for (Bit b : decision) h = next_height(h, b, threshold);
  }
  if (!rng.bernoulli(h, threshold.d * K)) return PlayOutcome{PlayResult::waited, 0, false};
  const Bit bit = stream.bit_at(offset + t_star);
  return PlayOutcome{bit == 0 ? PlayResult::crossed_safely : PlayResult::squashed, t_star, false};
}

WindowTally tally_window(const BitStream& stream, std::uint64_t offset, const RationalThreshold& threshold,
                         std::uint64_t K, std::uint64_t steps) {
  if (K < 2) throw InvalidArgument("tally_window needs K > 1");
  if (steps > K) throw InvalidArgument("tally_window: steps exceed K");
  check_capacity(threshold, K);
  WindowTally tally;
  tally.K = K;
  tally.steps = steps;
  constexpr std::uint64_t kChunk = 1 << 16;
  BitVector buffer;
  std::uint64_t h = 0;  // H_{t-1} when looking at b_t
  for (std::uint64_t done = 0; done < steps;) {
    const std::uint64_t count = std::min(kChunk, steps - done);
    buffer.resize(count);
    stream.read(offset + done + 1, buffer);
    for (Bit b : buffer) {
      (b == 0 ? tally.zero_mass : tally.one_mass) += h;
      h = next_height(h, b, threshold);
    }
    done += count;
  }
  return tally;
}

OutcomeProbabilities outcome_from_tally(const WindowTally& tally, const RationalThreshold& threshold) {
  const BigInt denominator = BigInt(threshold.d) * tally.K * tally.K;
  OutcomeProbabilities out;
  out.success = Rational(to_bigint(tally.zero_mass), denominator);
  out.death = Rational(to_bigint(tally.one_mass), denominator);
  out.wait = 1 - out.success - out.death;
  return out;
}

}  // namespace frogpred
