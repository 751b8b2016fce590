#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "frogpred/rational.hpp"
#include "frogpred/streams.hpp"

namespace frogpred {

/// Largest n accepted by the forecaster; keeps 2^n inside the 64-bit index space.
inline constexpr std::uint64_t kMaxForecastN = 62;
/// Largest n for exhaustive enumeration over (R, S).
inline constexpr std::uint64_t kMaxExactN = 16;
/// Largest n for the leaf-level martingale report.
inline constexpr std::uint64_t kMaxMartingaleN = 20;

struct ForecastParams {
  Rational delta;
  Rational eps;
  std::uint64_t n = 1;
  /// n was supplied directly instead of ceil(4 / (delta eps^2)).
  bool overridden = false;

  /// 2^n: the prefix length the forecaster may touch.
  std::uint64_t horizon() const { return std::uint64_t{1} << n; }
};

/// n = ceil(4 / (delta eps^2)); delta, eps in (0,1]. CapacityError when n > kMaxForecastN.
ForecastParams forecast_params(const Rational& delta, const Rational& eps);
/// Same validation with n given directly.
ForecastParams forecast_params(const Rational& delta, const Rational& eps, std::uint64_t n_override);

struct Forecast {
  std::uint64_t n = 0;
  std::uint64_t R = 0;
  std::uint64_t S = 0;
  /// Bits skipped: (S-1) 2^R.
  std::uint64_t t = 0;
  /// 2^(R-1): length of both the observed and the forecast window.
  std::uint64_t N = 0;
  std::uint64_t ones = 0;
  /// ones / N over bits t+1 .. t+N.
  Rational p;

  bool operator==(const Forecast&) const = default;
};

struct ScoredForecast {
  Forecast forecast;
  std::uint64_t ones_star = 0;
  /// Fraction of ones in bits t+N+1 .. t+2N.
  Rational p_star;
  /// |p - p_star| < eps.
  bool success = false;
};

/// Draws R uniform on [n], then S uniform on [2^(n-R)], and reads only the observed window.
Forecast run_forecaster(const BitStream& stream, std::uint64_t n, std::uint64_t seed);

ScoredForecast score_forecast(const BitStream& stream, const Forecast& forecast, const Rational& eps);

/// Exact probability, over R and S, that the forecast is not eps-successful on
/// the given first 2^n bits. n <= kMaxExactN.
Rational exact_failure_probability(std::span<const Bit> prefix, std::uint64_t n, const Rational& eps);

/// Exact E[(p - p_star)^2] over the forecaster's randomness.
Rational expected_square_error(std::span<const Bit> prefix, std::uint64_t n);

/// Complete binary tree of depth n whose leaves, in lexicographic order, carry x_1..x_{2^n}.
class TreeView {
 public:
  TreeView(std::span<const Bit> leaves, std::uint64_t n);

  std::uint64_t depth() const noexcept { return n_; }
  /// Ones among the leaves under the node at `level` with lexicographic position `index`.
  std::uint64_t ones(std::uint64_t level, std::uint64_t index) const;
  /// Fraction of ones under that node.
  Rational rho(std::uint64_t level, std::uint64_t index) const;

 private:
  std::uint64_t n_;
  std::vector<std::uint64_t> prefix_ones_;
};

struct MartingaleReport {
  std::uint64_t n = 0;
  /// E[(X(n) - X(0))^2]
  Rational total;
  /// E[(X(t+1) - X(t))^2] for t = 0..n-1.
  std::vector<Rational> level_terms;
  Rational level_sum;
  /// Largest |E[X(t+1) - X(t) | z_1..z_t]| over the nodes of each level.
  std::vector<Rational> level_residuals;
  /// E[(p - p_star)^2], computed from the forecast windows directly.
  Rational expected_square_error;
  /// 4/n
  Rational bound;
  bool identity_holds = false;
  bool residuals_zero = false;
  /// expected_square_error == (4/n) total
  bool window_identity_holds = false;
};

MartingaleReport martingale_report(std::span<const Bit> prefix, std::uint64_t n);

}  // namespace frogpred
