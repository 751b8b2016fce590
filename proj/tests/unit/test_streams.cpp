#include "catch_amalgamated.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "frogpred/error.hpp"
#include "frogpred/rng.hpp"
#include "frogpred/stream_spec.hpp"
#include "frogpred/streams.hpp"

using namespace frogpred;

namespace {

BitStream make(const char* text) { return generate(parse_stream_spec(text)); }

std::uint64_t ones(const BitVector& bits) {
  std::uint64_t n = 0;
  for (Bit b : bits) n += b;
  return n;
}

}  // namespace

TEST_CASE("from_finite indexes and pads") {
  const BitStream s = from_finite({1, 0, 1}, 0);
  CHECK(s.bit_at(1) == 1);
  CHECK(s.bit_at(2) == 0);
  CHECK(s.bit_at(9) == 0);
  CHECK(from_finite({1}, 1).bit_at(5) == 1);
  CHECK_THROWS_AS(from_finite({}, 0), InvalidSpec);
  CHECK_THROWS_AS(s.bit_at(0), InvalidArgument);
}

TEST_CASE("bernoulli extremes") {
  const BitVector zeros = make("bernoulli:0:seed=3").prefix(1000);
  const BitVector all = make("bernoulli:1:seed=3").prefix(1000);
  CHECK(ones(zeros) == 0);
  CHECK(ones(all) == 1000);
}

TEST_CASE("bernoulli rate matches on average") {
  const BitVector bits = make("bernoulli:3/10:seed=11").prefix(200000);
  const double rate = static_cast<double>(ones(bits)) / 200000;
  CHECK(std::abs(rate - 0.3) < 4 * std::sqrt(0.3 * 0.7 / 200000));
}

TEST_CASE("eps-plus-halving schedule rates") {
  // P[b_1 = 1] = 1/10 + 1/2, P[b_2 = 1] = 1/10 + 1/4, measured across seeds.
  const StreamSpec spec = parse_stream_spec("bernoulli:eps-plus-halving:eps=1/10");
  const int n = 20000;
  int first = 0, second = 0;
  for (int s = 0; s < n; ++s) {
    const BitStream stream = generate(spec, static_cast<std::uint64_t>(s));
    first += stream.bit_at(1);
    second += stream.bit_at(2);
  }
  CHECK(std::abs(first / double(n) - 0.6) < 4 * std::sqrt(0.6 * 0.4 / n));
  CHECK(std::abs(second / double(n) - 0.35) < 4 * std::sqrt(0.35 * 0.65 / n));
}

TEST_CASE("burst streams meet their certificate at every dip") {
  for (const char* text : {"burst:eps=1/10:seed=0", "burst:eps=1/10:seed=9", "burst:eps=1/4:growth=4:seed=2",
                           "burst:eps=1/3:growth=3:seed=5"}) {
    const StreamSpec spec = parse_stream_spec(text);
    const BurstSpec& burst = std::get<BurstSpec>(spec.node);
    const BitStream stream = generate(spec);
    const auto dips = certified_dips(burst, 2'000'000);
    REQUIRE(dips.size() >= 3);
    for (std::uint64_t t : dips) {
      const DensityReport d = prefix_density(stream, t);
      CHECK(d.density <= burst.eps);
      // Independent count.
      CHECK(ones(stream.prefix(t)) == d.ones);
    }
    // Not trivially sparse: ones actually appear.
    CHECK(prefix_density(stream, dips.back()).ones > 0);
  }
}

TEST_CASE("prefix_density examples") {
  CHECK(prefix_density(make("periodic:0"), 100).density == 0);
  CHECK(prefix_density(make("periodic:10"), 4).density == Rational(1, 2));
  const DensityReport d = prefix_density(from_finite({1, 1, 0}, 0), 6, 1);
  CHECK(d.density == Rational(1, 3));
  CHECK(d.ones == 2);
  CHECK(d.running_inf == Rational(1, 3));
  CHECK(prefix_density(from_finite({0, 1, 1}, 0), 3, 1).running_inf == 0);
  CHECK_THROWS_AS(prefix_density(make("periodic:1"), 0), InvalidArgument);
}

TEST_CASE("running infimum agrees with a direct scan") {
  const BitStream s = make("bernoulli:1/3:seed=4");
  const BitVector bits = s.prefix(500);
  Rational best = 2;
  std::uint64_t count = 0;
  for (std::uint64_t u = 1; u <= 500; ++u) {
    count += bits[u - 1];
    if (u >= 100) best = std::min(best, Rational(BigInt(count), BigInt(u)));
  }
  CHECK(prefix_density(s, 500, 100).running_inf == best);
}

TEST_CASE("negate examples") {
  CHECK(ones(negate(make("periodic:0")).prefix(50)) == 50);
  CHECK(negate(from_finite({1, 0, 1}, 0)).prefix(5) == BitVector{0, 1, 0, 1, 1});
  const BitStream s = make("bernoulli:1/2:seed=8");
  CHECK(negate(negate(s)).prefix(4096) == s.prefix(4096));
}

TEST_CASE("density of a stream and its complement add to t") {
  for (const char* text : {"bernoulli:1/7:seed=1", "burst:eps=1/10:seed=3", "periodic:110", "neg(periodic:10)"}) {
    const BitStream s = make(text);
    for (std::uint64_t t : {1u, 17u, 1000u, 70001u}) {
      CHECK(prefix_density(s, t).ones + prefix_density(negate(s), t).ones == t);
    }
  }
}

TEST_CASE("replay determinism and random access") {
  for (const char* text : {"bernoulli:1/3:seed=77", "burst:eps=1/5:growth=3:seed=1",
                           "bernoulli:eps-plus-halving:eps=1/20:seed=2"}) {
    const BitStream a = make(text);
    const BitStream b = make(text);
    const BitVector pa = a.prefix(100000);
    CHECK(pa == b.prefix(100000));
    SeededRng rng(5);
    for (int i = 0; i < 200; ++i) {
      const std::uint64_t index = 1 + rng.uniform_below(100000);
      CHECK(a.bit_at(index) == pa[index - 1]);
    }
    CHECK(a.window(500, 1000) == BitVector(pa.begin() + 499, pa.begin() + 1499));
  }
}

TEST_CASE("seed override changes stochastic streams only") {
  const StreamSpec spec = parse_stream_spec("bernoulli:1/2:seed=1");
  CHECK(generate(spec, 1).prefix(256) == generate(spec).prefix(256));
  CHECK(generate(spec, 2).prefix(256) != generate(spec).prefix(256));
  const StreamSpec periodic = parse_stream_spec("periodic:01");
  CHECK(generate(periodic, 99).prefix(10) == generate(periodic).prefix(10));
}

TEST_CASE("spec grammar cases") {
  const StreamSpec f = parse_stream_spec("finite:101:pad=0");
  REQUIRE(std::holds_alternative<FiniteSpec>(f.node));
  CHECK(std::get<FiniteSpec>(f.node).bits == BitVector{1, 0, 1});
  CHECK(std::get<FiniteSpec>(f.node).pad == 0);

  const StreamSpec n = parse_stream_spec("neg(periodic:10)");
  REQUIRE(std::holds_alternative<NegatedSpec>(n.node));
  CHECK(std::get<PeriodicSpec>(std::get<NegatedSpec>(n.node).inner->node).pattern == BitVector{1, 0});

  CHECK_THROWS_AS(parse_stream_spec("bernoulli:3/2:seed=1"), ParseError);
  CHECK_THROWS_AS(parse_stream_spec("bogus:1"), ParseError);
  CHECK_THROWS_AS(parse_stream_spec("periodic:"), ParseError);
  CHECK_THROWS_AS(parse_stream_spec("neg(periodic:1"), ParseError);
  CHECK_THROWS_AS(parse_stream_spec("burst:eps=1/10:eps=1/5"), ParseError);
  CHECK_THROWS_AS(parse_stream_spec("finite:1:pad=2"), ParseError);
}

TEST_CASE("print and parse are inverse on canonical forms") {
  for (const char* text :
       {"finite:101:pad=0", "finite:1:pad=1", "periodic:10", "bernoulli:1/10:seed=7", "bernoulli:0:seed=0",
        "bernoulli:eps-plus-halving:eps=1/10:seed=7", "burst:eps=1/10:seed=7", "burst:eps=3/20:growth=4:seed=0",
        "neg(neg(periodic:0110))", "neg(burst:eps=1/10:seed=2)", "file:/tmp/x.bits"}) {
    const StreamSpec spec = parse_stream_spec(text);
    CHECK(to_string(spec) == text);
    CHECK(parse_stream_spec(to_string(spec)) == spec);
  }
  // Non-canonical inputs normalise.
  CHECK(to_string(parse_stream_spec("bernoulli:0.1")) == "bernoulli:1/10:seed=0");
  CHECK(to_string(parse_stream_spec("burst:eps=2/20:growth=10")) == "burst:eps=1/10:seed=0");
}

TEST_CASE("file streams read ASCII bits and pad with zero") {
  const auto path = std::filesystem::temp_directory_path() / "frogpred_test_stream.bits";
  {
    std::ofstream out(path);
    out << "1 0 1\n1\n";
  }
  const BitStream s = make(("file:" + path.string()).c_str());
  CHECK(s.prefix(6) == BitVector{1, 0, 1, 1, 0, 0});
  {
    std::ofstream out(path);
    out << "10x1";
  }
  CHECK_THROWS_AS(make(("file:" + path.string()).c_str()), InvalidSpec);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(make(("file:" + path.string()).c_str()), InvalidSpec);
}
