#include "frogpred/forecast.hpp"

#include <algorithm>

#include "frogpred/error.hpp"
#include "frogpred/rng.hpp"

namespace frogpred {

namespace {

void check_unit(const Rational& value, const char* name) {
  if (value <= 0 || value > 1) throw InvalidArgument(std::string(name) + " must lie in (0,1]");
}

void check_prefix(std::span<const Bit> prefix, std::uint64_t n, std::uint64_t cap, const char* what) {
  if (n == 0) throw InvalidArgument("n must be at least 1");
  if (n > cap) {
    throw CapacityError(std::string(what) + " supports n <= " + std::to_string(cap) + ", got " + std::to_string(n));
  }
  if (prefix.size() < (std::uint64_t{1} << n)) throw InvalidArgument("prefix must hold at least 2^n bits");
}

std::vector<std::uint64_t> prefix_counts(std::span<const Bit> bits) {
  std::vector<std::uint64_t> counts(bits.size() + 1, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) counts[i + 1] = counts[i] + bits[i];
  return counts;
}

std::uint64_t count_ones(const BitStream& stream, std::uint64_t first, std::uint64_t count) {
  constexpr std::uint64_t kChunk = 1 << 16;
  BitVector buffer;
  std::uint64_t ones = 0;
  for (std::uint64_t done = 0; done < count;) {
    const std::uint64_t take = std::min(kChunk, count - done);
    buffer.resize(take);
    stream.read(first + done, buffer);
    for (Bit b : buffer) ones += b;
    done += take;
  }
  return ones;
}

}  // namespace

ForecastParams forecast_params(const Rational& delta, const Rational& eps) {
  check_unit(delta, "delta");
  check_unit(eps, "eps");
  const BigInt n = ceil_nonneg(Rational(4) / (delta * eps * eps));
  if (n > kMaxForecastN) {
    throw CapacityError("n = " + n.str() + " puts the horizon 2^n beyond the 64-bit index space; override n");
  }
  return ForecastParams{delta, eps, n.convert_to<std::uint64_t>(), false};
}

ForecastParams forecast_params(const Rational& delta, const Rational& eps, std::uint64_t n_override) {
  check_unit(delta, "delta");
  check_unit(eps, "eps");
  if (n_override == 0) throw InvalidArgument("n must be at least 1");
  if (n_override > kMaxForecastN) throw CapacityError("n must not exceed " + std::to_string(kMaxForecastN));
  return ForecastParams{delta, eps, n_override, true};
}

Forecast run_forecaster(const BitStream& stream, std::uint64_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("n must be at least 1");
  if (n > kMaxForecastN) throw CapacityError("n must not exceed " + std::to_string(kMaxForecastN));
  SeededRng rng(seed);
  Forecast f;
  f.n = n;
  f.R = 1 + rng.uniform_below(n);
  f.S = 1 + rng.uniform_below(std::uint64_t{1} << (n - f.R));
  f.t = (f.S - 1) << f.R;
  f.N = std::uint64_t{1} << (f.R - 1);
  f.ones = count_ones(stream, f.t + 1, f.N);
  f.p = Rational(BigInt(f.ones), BigInt(f.N));
  return f;
}

ScoredForecast score_forecast(const BitStream& stream, const Forecast& forecast, const Rational& eps) {
  if (forecast.N == 0) throw InvalidArgument("forecast window is empty");
  ScoredForecast scored;
  scored.forecast = forecast;
  scored.ones_star = count_ones(stream, forecast.t + forecast.N + 1, forecast.N);
  scored.p_star = Rational(BigInt(scored.ones_star), BigInt(forecast.N));
  scored.success = abs(forecast.p - scored.p_star) < eps;
  return scored;
}

Rational exact_failure_probability(std::span<const Bit> prefix, std::uint64_t n, const Rational& eps) {
  check_prefix(prefix, n, kMaxExactN, "exact enumeration");
  if (eps <= 0) throw InvalidArgument("eps must be positive");
  const auto counts = prefix_counts(prefix.first(std::size_t{1} << n));
  // Failure iff |diff| / N >= eps, i.e. |diff| * den >= num * N.
  const BigInt num = numerator(eps);
  const BigInt den = denominator(eps);
  // Each (R, S) has probability 2^R / (n 2^n).
  BigInt failures = 0;
  for (std::uint64_t R = 1; R <= n; ++R) {
    const std::uint64_t N = std::uint64_t{1} << (R - 1);
    std::uint64_t failed = 0;
    for (std::uint64_t S = 1; S <= (std::uint64_t{1} << (n - R)); ++S) {
      const std::uint64_t t = (S - 1) << R;
      const auto obs = static_cast<std::int64_t>(counts[t + N] - counts[t]);
      const auto next = static_cast<std::int64_t>(counts[t + 2 * N] - counts[t + N]);
      const BigInt diff = obs > next ? obs - next : next - obs;
      if (diff * den >= num * N) ++failed;
    }
    failures += BigInt(failed) << static_cast<unsigned>(R);
  }
  return Rational(failures, BigInt(n) << static_cast<unsigned>(n));
}

Rational expected_square_error(std::span<const Bit> prefix, std::uint64_t n) {
  check_prefix(prefix, n, kMaxMartingaleN, "window enumeration");
  const auto counts = prefix_counts(prefix.first(std::size_t{1} << n));
  // (diff/N)^2 with weight 2^R/(n 2^n) equals diff^2 * 4 * 2^(n-R) / (n 4^n).
  BigInt total = 0;
  for (std::uint64_t R = 1; R <= n; ++R) {
    const std::uint64_t N = std::uint64_t{1} << (R - 1);
    BigInt level = 0;
    for (std::uint64_t t = 0; t < (std::uint64_t{1} << n); t += 2 * N) {
      const auto obs = static_cast<std::int64_t>(counts[t + N] - counts[t]);
      const auto next = static_cast<std::int64_t>(counts[t + 2 * N] - counts[t + N]);
      level += BigInt((obs - next) * (obs - next));
    }
    total += level * 4 << static_cast<unsigned>(n - R);
  }
  return Rational(total, BigInt(n) << static_cast<unsigned>(2 * n));
}

TreeView::TreeView(std::span<const Bit> leaves, std::uint64_t n) : n_(n) {
  check_prefix(leaves, n, kMaxForecastN, "tree view");
  prefix_ones_ = prefix_counts(leaves.first(std::size_t{1} << n));
}

std::uint64_t TreeView::ones(std::uint64_t level, std::uint64_t index) const {
  if (level > n_) throw InvalidArgument("tree level out of range");
  if (index >= (std::uint64_t{1} << level)) throw InvalidArgument("tree node index out of range");
  const std::uint64_t width = std::uint64_t{1} << (n_ - level);
  return prefix_ones_[(index + 1) * width] - prefix_ones_[index * width];
}

Rational TreeView::rho(std::uint64_t level, std::uint64_t index) const {
  return Rational(BigInt(ones(level, index)), BigInt(std::uint64_t{1} << (n_ - level)));
}

MartingaleReport martingale_report(std::span<const Bit> prefix, std::uint64_t n) {
  check_prefix(prefix, n, kMaxMartingaleN, "martingale report");
  const TreeView tree(prefix, n);
  MartingaleReport report;
  report.n = n;

  const std::uint64_t leaves = std::uint64_t{1} << n;
  const std::uint64_t ones = tree.ones(0, 0);
  const Rational mean{BigInt(ones), BigInt(leaves)};
  report.total = (Rational(ones) * (1 - mean) * (1 - mean) + Rational(leaves - ones) * mean * mean) / leaves;

  report.residuals_zero = true;
  for (std::uint64_t t = 0; t < n; ++t) {
    const std::uint64_t nodes = std::uint64_t{1} << t;
    // (X(t+1) - X(t))^2 = (o0 - o1)^2 / 4^(n-t) at each child.
    BigInt squares = 0;
    Rational worst = 0;
    for (std::uint64_t y = 0; y < nodes; ++y) {
      const auto o0 = static_cast<std::int64_t>(tree.ones(t + 1, 2 * y));
      const auto o1 = static_cast<std::int64_t>(tree.ones(t + 1, 2 * y + 1));
      squares += BigInt((o0 - o1) * (o0 - o1));
      const Rational drift = (tree.rho(t + 1, 2 * y) + tree.rho(t + 1, 2 * y + 1)) / 2 - tree.rho(t, y);
      worst = std::max(worst, Rational(abs(drift)));
    }
    report.level_terms.emplace_back(squares, BigInt(nodes) << static_cast<unsigned>(2 * (n - t)));
    report.level_sum += report.level_terms.back();
    report.level_residuals.push_back(worst);
    if (worst != 0) report.residuals_zero = false;
  }
  report.expected_square_error = expected_square_error(prefix, n);
  report.bound = Rational(BigInt(4), BigInt(n));
  report.identity_holds = report.total == report.level_sum;
  report.window_identity_holds = report.expected_square_error == report.bound * report.total;
  return report;
}

}  // namespace frogpred
