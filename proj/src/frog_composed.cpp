#include "frogpred/frog_composed.hpp"

#include <limits>

#include "frogpred/error.hpp"

namespace frogpred {

namespace {

constexpr auto kIndexMax = static_cast<unsigned __int128>(std::numeric_limits<std::int64_t>::max());

}  // namespace

std::uint64_t default_K(const Rational& eps, const Rational& gamma, const Rational& C) {
  if (eps <= 0 || eps >= 1) throw InvalidArgument("eps must lie in (0,1)");
  if (gamma <= 0) throw InvalidArgument("gamma must be positive");
  if (eps + gamma >= 1) throw InvalidArgument("eps + gamma must be below 1");
  if (C <= 0) throw InvalidArgument("C must be positive");
  const Rational eps2 = eps + 2 * gamma / 3;
  const BigInt k = ceil_nonneg(C * eps2 / (gamma * (1 - eps2)));
  return std::max<std::uint64_t>(2, to_u64(k, "default K"));
}

CompositionParams CompositionParams::make(const Rational& eps, const Rational& gamma, std::optional<std::uint64_t> K,
                                          const Rational& C) {
  CompositionParams params;
  params.K = K ? *K : default_K(eps, gamma, C);
  if (K) {
    // Same validation as default_K.
    (void)default_K(eps, gamma, C);
    if (*K < 2) throw InvalidArgument("K must be at least 2");
  }
  params.eps = eps;
  params.gamma = gamma;
  params.eps1 = eps + gamma / 3;
  params.eps2 = eps + 2 * gamma / 3;
  params.threshold = RationalThreshold::from_rational(params.eps2);
  return params;
}

Interval schedule(std::uint64_t K, std::uint64_t r) {
  if (K == 0 || r == 0) throw InvalidArgument("schedule needs K >= 1 and r >= 1");
  const unsigned __int128 rr = r;
  // K * sum_{j<r} j^2 = K (r-1) r (2r-1) / 6
  const unsigned __int128 before = static_cast<unsigned __int128>(K) * ((rr - 1) * rr * (2 * rr - 1) / 6);
  const unsigned __int128 length = static_cast<unsigned __int128>(K) * rr * rr;
  if (before + length > kIndexMax) throw CapacityError("interval " + std::to_string(r) + " exceeds the 64-bit index range");
  const auto start = static_cast<std::uint64_t>(before + 1);
  return Interval{start, static_cast<std::uint64_t>(start + length - 1)};
}

ComposedEvaluator::ComposedEvaluator(BitStream stream, CompositionParams params, std::optional<std::uint64_t> horizon)
    : stream_(std::move(stream)) {
  report_.params = std::move(params);
  report_.horizon = horizon;
  report_.residual = 1;
}

bool ComposedEvaluator::advance() {
  const auto& params = report_.params;
  const std::uint64_t r = report_.intervals.size() + 1;
  const Interval interval = schedule(params.K, r);
  std::uint64_t steps = interval.length();
  if (report_.horizon) {
    if (interval.start > *report_.horizon) return false;
    steps = std::min(steps, *report_.horizon - interval.start + 1);
  }
  check_capacity(params.threshold, interval.length());

  const WindowTally tally = tally_window(stream_, interval.start - 1, params.threshold, interval.length(), steps);
  IntervalRecord record;
  record.r = r;
  record.interval = interval;
  record.steps = steps;
  record.reach = report_.residual;
  record.outcome = outcome_from_tally(tally, params.threshold);

  report_.success_total += record.reach * record.outcome.success;
  report_.death_total += record.reach * record.outcome.death;
  report_.residual = record.reach * record.outcome.wait;
  report_.intervals.push_back(std::move(record));
  return true;
}

CompositeReport composed_exact(const BitStream& stream, const CompositionParams& params, std::uint64_t R_max,
                               std::optional<std::uint64_t> horizon) {
  if (R_max == 0) throw InvalidArgument("R_max must be at least 1");
  // Fail before doing any work when the last interval cannot be represented.
  check_capacity(params.threshold, schedule(params.K, R_max).length());
  ComposedEvaluator evaluator(stream, params, horizon);
  while (evaluator.intervals_done() < R_max && evaluator.advance()) {
  }
  return evaluator.report();
}

CompositeReport composed_until_residual(const BitStream& stream, const CompositionParams& params,
                                        const Rational& target, std::uint64_t R_cap) {
  ComposedEvaluator evaluator(stream, params);
  while (evaluator.intervals_done() < R_cap && evaluator.report().residual >= target) evaluator.advance();
  return evaluator.report();
}

bool consistent(const CompositeReport& report) {
  Rational success, death;
  Rational reach = 1;
  for (const auto& rec : report.intervals) {
    if (rec.reach != reach) return false;
    if (rec.outcome.success + rec.outcome.death + rec.outcome.wait != 1) return false;
    success += rec.reach * rec.outcome.success;
    death += rec.reach * rec.outcome.death;
    reach *= rec.outcome.wait;
  }
  return success == report.success_total && death == report.death_total && reach == report.residual &&
         report.success_total + report.death_total + report.residual == 1;
}

PlayOutcome sample_composed(const BitStream& stream, const CompositionParams& params, std::uint64_t seed,
                            std::uint64_t R_max) {
  if (R_max == 0) throw InvalidArgument("R_max must be at least 1");
  SeededRng rng(seed);
  constexpr std::uint64_t kChunk = 1 << 16;
  BitVector buffer;
  for (std::uint64_t r = 1; r <= R_max; ++r) {
    const Interval interval = schedule(params.K, r);
    const std::uint64_t length = interval.length();
    check_capacity(params.threshold, length);
    const std::uint64_t t_star = 1 + rng.uniform_below(length);
    std::uint64_t h = 0;
    for (std::uint64_t done = 0; done + 1 < t_star;) {
      const std::uint64_t count = std::min(kChunk, t_star - 1 - done);
      buffer.resize(count);
      stream.read(interval.start + done, buffer);
      for (Bit b : buffer) h = next_height(h, b, params.threshold);
      done += count;
    }
    if (rng.bernoulli(h, params.threshold.d * length)) {
      const std::uint64_t index = interval.start + t_star - 1;
      return PlayOutcome{stream.bit_at(index) == 0 ? PlayResult::crossed_safely : PlayResult::squashed, index, false};
    }
  }
  return PlayOutcome{PlayResult::waited, 0, true};
}

FrogRunner::FrogRunner(const CompositionParams& params, std::uint64_t R_max, std::uint64_t seed)
    : threshold_(params.threshold), base_K_(params.K), R_max_(R_max), rng_(seed) {
  if (R_max == 0) throw InvalidArgument("R_max must be at least 1");
  begin_interval();
}

void FrogRunner::begin_interval() {
  ++r_;
  if (r_ > R_max_) {
    exhausted_ = true;
    return;
  }
  length_ = schedule(base_K_, r_).length();
  check_capacity(threshold_, length_);
  position_ = 0;
  height_ = 0;
  t_star_ = 1 + rng_.uniform_below(length_);
  // t* = 1 decides on an empty stack; the draw still happens.
  if (t_star_ == 1) decide();
}

void FrogRunner::decide() {
  if (rng_.bernoulli(height_, threshold_.d * length_)) fired_ = true;
}

bool FrogRunner::step(Bit bit) {
  if (fired_ || exhausted_) return false;
  ++consumed_;
  ++position_;
  if (position_ < t_star_) height_ = next_height(height_, bit, threshold_);
  if (position_ + 1 == t_star_) {
    decide();
    if (fired_) return true;
  }
  if (position_ == length_) begin_interval();
  return false;
}

}  // namespace frogpred
