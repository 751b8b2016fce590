#include "catch_amalgamated.hpp"

#include <atomic>
#include <cmath>

#include "frogpred/error.hpp"
#include "frogpred/forecast.hpp"
#include "frogpred/rng.hpp"
#include "frogpred/streams.hpp"

using namespace frogpred;

namespace {

BitStream make(const char* text) { return generate(parse_stream_spec(text)); }

BitVector bits_of(std::uint64_t mask, std::uint64_t length) {
  BitVector out(length);
  for (std::uint64_t i = 0; i < length; ++i) out[i] = static_cast<Bit>((mask >> i) & 1);
  return out;
}

BitVector random_bits(SeededRng& rng, std::size_t n) {
  BitVector out(n);
  for (auto& b : out) b = static_cast<Bit>(rng.uniform_below(2));
  return out;
}

/// Records the largest index read.
class WatchedSource final : public StreamSource {
 public:
  explicit WatchedSource(BitStream inner) : inner_(std::move(inner)) {}
  Bit bit_at(std::uint64_t index) const override {
    note(index);
    return inner_.bit_at(index);
  }
  void read(std::uint64_t first, std::span<Bit> out) const override {
    if (!out.empty()) note(first + out.size() - 1);
    inner_.read(first, out);
  }
  std::uint64_t max_index() const { return max_.load(); }

 private:
  void note(std::uint64_t index) const {
    std::uint64_t seen = max_.load();
    while (index > seen && !max_.compare_exchange_weak(seen, index)) {
    }
  }
  BitStream inner_;
  mutable std::atomic<std::uint64_t> max_{0};
};

/// Failure mass by direct rational arithmetic over every (R, S).
Rational failure_oracle(const BitVector& x, std::uint64_t n, const Rational& eps) {
  Rational total = 0;
  for (std::uint64_t R = 1; R <= n; ++R) {
    const std::uint64_t N = std::uint64_t{1} << (R - 1);
    const std::uint64_t choices = std::uint64_t{1} << (n - R);
    for (std::uint64_t S = 1; S <= choices; ++S) {
      const std::uint64_t t = (S - 1) << R;
      Rational p = 0, q = 0;
      for (std::uint64_t i = 0; i < N; ++i) {
        p += Rational(x[t + i], static_cast<long>(N));
        q += Rational(x[t + N + i], static_cast<long>(N));
      }
      if (!(abs(p - q) < eps)) total += Rational(1, static_cast<long>(n * choices));
    }
  }
  return total;
}

}  // namespace

TEST_CASE("forecast parameters") {
  CHECK(forecast_params(Rational(1), Rational(1)).n == 4);
  CHECK(forecast_params(Rational(1, 2), Rational(1, 2)).n == 32);
  CHECK(forecast_params(Rational(1, 2), Rational(1, 2)).horizon() == (std::uint64_t{1} << 32));
  CHECK_FALSE(forecast_params(Rational(1), Rational(1)).overridden);
  CHECK_THROWS_AS(forecast_params(Rational(1, 100), Rational(1, 10)), CapacityError);
  const ForecastParams o = forecast_params(Rational(1, 100), Rational(1, 10), 12);
  CHECK(o.overridden);
  CHECK(o.n == 12);
  CHECK_THROWS_AS(forecast_params(Rational(0), Rational(1, 2)), InvalidArgument);
  CHECK_THROWS_AS(forecast_params(Rational(1, 2), Rational(3, 2)), InvalidArgument);
  CHECK_THROWS_AS(forecast_params(Rational(1, 2), Rational(1, 2), 63), CapacityError);
}

TEST_CASE("forecaster basics") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CHECK(run_forecaster(make("periodic:0"), 8, seed).p == 0);
  }
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const BitStream s = make("bernoulli:1/2:seed=3");
    const Forecast f = run_forecaster(s, 1, seed);
    CHECK(f.R == 1);
    CHECK(f.S == 1);
    CHECK(f.t == 0);
    CHECK(f.N == 1);
    CHECK(f.p == s.bit_at(1));
  }
  const BitStream s = make("bernoulli:1/3:seed=1");
  CHECK(run_forecaster(s, 10, 44) == run_forecaster(s, 10, 44));
}

TEST_CASE("forecast fields are consistent") {
  const BitStream s = make("bernoulli:2/5:seed=7");
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Forecast f = run_forecaster(s, 9, seed);
    CHECK((f.R >= 1 && f.R <= 9));
    CHECK((f.S >= 1 && f.S <= (std::uint64_t{1} << (9 - f.R))));
    CHECK(f.t == (f.S - 1) * (std::uint64_t{1} << f.R));
    CHECK(f.N == (std::uint64_t{1} << (f.R - 1)));
    CHECK(f.t + 2 * f.N <= (std::uint64_t{1} << 9));
    const BitVector w = s.window(f.t + 1, f.N);
    std::uint64_t ones = 0;
    for (Bit b : w) ones += b;
    CHECK(f.p == Rational(BigInt(ones), BigInt(f.N)));
  }
}

TEST_CASE("forecaster never reads the forecast window") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    auto watched = std::make_shared<WatchedSource>(make("bernoulli:1/2:seed=9"));
    const BitStream s(watched);
    const Forecast f = run_forecaster(s, 10, seed);
    CHECK(watched->max_index() <= f.t + f.N);
    CHECK(watched->max_index() >= f.t + 1);
  }
}

TEST_CASE("scoring examples") {
  const BitStream zeros = make("periodic:0");
  const ScoredForecast z = score_forecast(zeros, run_forecaster(zeros, 6, 1), Rational(1, 1000));
  CHECK(z.p_star == 0);
  CHECK(z.success);

  const BitStream alt = make("periodic:01");
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Forecast f = run_forecaster(alt, 4, seed);
    const ScoredForecast sc = score_forecast(alt, f, Rational(1, 2));
    if (f.R >= 2) {
      CHECK(f.p == Rational(1, 2));
      CHECK(sc.p_star == Rational(1, 2));
      CHECK(sc.success);
    } else {
      CHECK(abs(f.p - sc.p_star) == 1);
      CHECK_FALSE(sc.success);
      CHECK_FALSE(score_forecast(alt, f, Rational(1)).success);
    }
  }
}

TEST_CASE("the success interval is open") {
  // Observed 1/2, realised 0: |p - p*| = 1/2 exactly.
  const BitStream s = from_finite({1, 0, 0, 0}, 0);
  Forecast f;
  f.n = 2;
  f.R = 2;
  f.S = 1;
  f.t = 0;
  f.N = 2;
  f.ones = 1;
  f.p = Rational(1, 2);
  CHECK_FALSE(score_forecast(s, f, Rational(1, 2)).success);
  CHECK(score_forecast(s, f, Rational(501, 1000)).success);
}

TEST_CASE("exact failure probability examples") {
  const BitVector alt = make("periodic:01").prefix(16);
  CHECK(exact_failure_probability(alt, 4, Rational(1, 2)) == Rational(1, 4));
  CHECK(exact_failure_probability(BitVector(256, 0), 8, Rational(1, 100)) == 0);
  SeededRng rng(4);
  const BitVector x = random_bits(rng, 1024);
  CHECK(exact_failure_probability(x, 10, Rational(11, 10)) == 0);
  CHECK_THROWS_AS(exact_failure_probability(BitVector(1 << 17, 0), 17, Rational(1, 2)), CapacityError);
  CHECK_THROWS_AS(exact_failure_probability(BitVector(8, 0), 4, Rational(1, 2)), InvalidArgument);
}

TEST_CASE("exact failure probability matches a rational oracle") {
  SeededRng rng(12);
  for (int trial = 0; trial < 60; ++trial) {
    const std::uint64_t n = 1 + rng.uniform_below(7);
    const BitVector x = random_bits(rng, std::size_t{1} << n);
    for (const Rational eps : {Rational(1, 8), Rational(1, 3), Rational(1, 2), Rational(3, 4)}) {
      CHECK(exact_failure_probability(x, n, eps) == failure_oracle(x, n, eps));
    }
  }
}

TEST_CASE("failure probability obeys the second-moment bound for every prefix of length 16") {
  const std::uint64_t n = 4;
  for (std::uint64_t mask = 0; mask < (1u << 16); ++mask) {
    const BitVector x = bits_of(mask, 16);
    const Rational square = expected_square_error(x, n);
    REQUIRE(square <= Rational(4, 4));
    for (const Rational eps : {Rational(1, 4), Rational(1, 2), Rational(3, 4)}) {
      const Rational fail = exact_failure_probability(x, n, eps);
      REQUIRE(fail <= Rational(4) / (Rational(n) * eps * eps));
      REQUIRE(fail <= square / (eps * eps));
    }
  }
}

TEST_CASE("sampled failure frequency matches the exact value") {
  const BitStream s = make("bernoulli:1/3:seed=2");
  const std::uint64_t n = 6;
  const Rational eps(1, 4);
  const Rational exact = exact_failure_probability(s.prefix(64), n, eps);
  const int trials = 40000;
  int failures = 0;
  for (int k = 0; k < trials; ++k) {
    if (!score_forecast(s, run_forecaster(s, n, derive_seed(5, k)), eps).success) ++failures;
  }
  const double q = to_double(exact);
  CHECK(q > 0);
  CHECK(std::abs(failures / double(trials) - q) <= 3 * std::sqrt(q * (1 - q) / trials));
}

TEST_CASE("tree view") {
  SeededRng rng(77);
  const BitVector x = random_bits(rng, 256);
  const TreeView tree(x, 8);
  CHECK(tree.rho(8, 5) == x[5]);
  for (std::uint64_t level = 0; level < 8; ++level) {
    for (std::uint64_t y = 0; y < (std::uint64_t{1} << level); ++y) {
      CHECK(tree.rho(level, y) == (tree.rho(level + 1, 2 * y) + tree.rho(level + 1, 2 * y + 1)) / 2);
    }
  }
  CHECK_THROWS_AS(tree.rho(9, 0), InvalidArgument);
  CHECK_THROWS_AS(tree.rho(2, 4), InvalidArgument);
}

TEST_CASE("martingale report hand case") {
  const MartingaleReport r = martingale_report(BitVector{1, 0, 0, 0}, 2);
  CHECK(r.total == Rational(3, 16));
  REQUIRE(r.level_terms.size() == 2);
  CHECK(r.level_terms[0] == Rational(1, 16));
  CHECK(r.level_terms[1] == Rational(2, 16));
  CHECK(r.level_sum == Rational(3, 16));
  CHECK(r.identity_holds);
  CHECK(r.residuals_zero);
  CHECK(r.expected_square_error == Rational(3, 8));
  CHECK(r.bound == 2);
}

TEST_CASE("martingale report on constant leaves") {
  for (Bit b : {Bit{0}, Bit{1}}) {
    const MartingaleReport r = martingale_report(BitVector(64, b), 6);
    CHECK(r.total == 0);
    CHECK(r.level_sum == 0);
    CHECK(r.expected_square_error == 0);
  }
}

TEST_CASE("martingale identities on random leaves") {
  SeededRng rng(100);
  for (std::uint64_t n = 1; n <= 10; ++n) {
    for (int trial = 0; trial < 20; ++trial) {
      const BitVector x = random_bits(rng, std::size_t{1} << n);
      const MartingaleReport r = martingale_report(x, n);
      CHECK(r.identity_holds);
      CHECK(r.residuals_zero);
      CHECK(r.window_identity_holds);
      CHECK(r.expected_square_error <= r.bound);
      // Independent total: mean squared deviation of leaf labels.
      Rational mean = 0;
      for (Bit b : x) mean += Rational(b);
      mean /= static_cast<long>(x.size());
      Rational spread = 0;
      for (Bit b : x) spread += (Rational(b) - mean) * (Rational(b) - mean);
      CHECK(r.total == spread / static_cast<long>(x.size()));
    }
  }
  CHECK_THROWS_AS(martingale_report(BitVector(1 << 21, 0), 21), CapacityError);
}
