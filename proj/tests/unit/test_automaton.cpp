#include "catch_amalgamated.hpp"

#include <vector>

#include "frogpred/automaton.hpp"
#include "frogpred/error.hpp"
#include "frogpred/rng.hpp"

using namespace frogpred;

namespace {

Automaton from_code(std::size_t l, std::size_t start, std::uint64_t code) {
  std::vector<std::array<std::size_t, 2>> delta(l);
  for (std::size_t q = 0; q < l; ++q) {
    for (std::size_t b = 0; b < 2; ++b) {
      delta[q][b] = 1 + code % l;
      code /= l;
    }
  }
  return Automaton(l, start, std::move(delta));
}

/// States reached by some word of length < l from q, found by walking every word.
std::uint32_t reach_by_words(const Automaton& m, std::size_t q) {
  const std::size_t l = m.size();
  std::uint32_t seen = 0;
  for (std::size_t len = 0; len < l; ++len) {
    for (std::uint64_t word = 0; word < (std::uint64_t{1} << len); ++word) {
      std::size_t state = q;
      for (std::size_t i = 0; i < len; ++i) state = m.next(state, static_cast<Bit>((word >> i) & 1));
      seen |= 1u << (state - 1);
    }
  }
  return seen;
}

}  // namespace

TEST_CASE("counter automaton trace") {
  const Automaton m = Automaton::counter(2);
  const BitVector x = {1, 0, 1, 1, 0};
  const RunTrace trace = run_trace(m, {2}, x);
  CHECK(trace.states == std::vector<std::size_t>{1, 2, 1, 2, 2, 1});
  CHECK(trace.visits[0] == std::vector<std::uint64_t>{0, 2, 5});
  CHECK(trace.visits[1] == std::vector<std::uint64_t>{1, 3, 4});
  CHECK(trace.bad_bits == BitVector{0, 1, 0, 1, 1, 0});

  CHECK(run_trace(m, {2}, BitVector{}).states == std::vector<std::size_t>{1});
  CHECK_THROWS_AS(run_trace(m, {3}, x), InvalidArgument);

  const Automaton one(1, 1, {{1, 1}});
  const RunTrace single = run_trace(one, {1}, x);
  CHECK(single.visits[0].size() == x.size() + 1);
}

TEST_CASE("counter transitions") {
  const Automaton m = Automaton::counter(4);
  CHECK(m.next(1, 1) == 2);
  CHECK(m.next(4, 1) == 4);
  CHECK(m.next(3, 0) == 1);
}

TEST_CASE("strong accessibility examples") {
  CHECK(strongly_accessible(Automaton::counter(3), {3}).strongly_accessible);
  const Automaton split(2, 1, {{1, 1}, {2, 2}});
  const Accessibility acc = strongly_accessible(split, {2});
  CHECK_FALSE(acc.strongly_accessible);
  REQUIRE(acc.witness);
  CHECK(*acc.witness == 1);
  CHECK(strongly_accessible(Automaton(1, 1, {{1, 1}}), {1}).strongly_accessible);
  CHECK_THROWS_AS(strongly_accessible(Automaton::counter(2), {}), InvalidArgument);
}

TEST_CASE("strong accessibility agrees with path enumeration for l <= 4") {
  std::uint64_t checked = 0;
  for (std::size_t l = 1; l <= 4; ++l) {
    std::uint64_t tables = 1;
    for (std::size_t i = 0; i < 2 * l; ++i) tables *= l;
    for (std::uint64_t code = 0; code < tables; ++code) {
      const Automaton base = from_code(l, 1, code);
      std::vector<std::uint32_t> reach(l + 1);
      for (std::size_t q = 1; q <= l; ++q) reach[q] = reach_by_words(base, q);
      for (std::size_t s = 1; s <= l; ++s) {
        const Automaton m = from_code(l, s, code);
        for (std::uint32_t bmask = 1; bmask < (1u << l); ++bmask) {
          StateSet bad;
          for (std::size_t q = 1; q <= l; ++q) {
            if (bmask >> (q - 1) & 1) bad.push_back(q);
          }
          bool expected = true;
          for (std::size_t q = 1; q <= l; ++q) {
            if ((reach[s] >> (q - 1) & 1) && !(reach[q] & bmask)) expected = false;
          }
          const Accessibility got = strongly_accessible(m, bad);
          REQUIRE(got.strongly_accessible == expected);
          if (!expected) {
            const std::size_t w = *got.witness;
            REQUIRE((reach[s] >> (w - 1) & 1));
            REQUIRE_FALSE(reach[w] & bmask);
          }
          ++checked;
        }
      }
    }
  }
  CHECK(checked == 1 * 1 * 1 + 16 * 2 * 3 + 729 * 3 * 7 + 65536 * 4 * 15);
}

TEST_CASE("subsequence examples") {
  const Automaton m = Automaton::counter(2);
  const BitVector x = {1, 0, 1, 1, 0};
  CHECK(subsequence(m, 1, x) == BitVector{1, 1});
  CHECK(subsequence(m, 2, x) == BitVector{0, 1, 0});
  const Automaton unreachable(2, 1, {{1, 1}, {2, 2}});
  CHECK(subsequence(unreachable, 2, x).empty());
  CHECK(subsequence(Automaton(1, 1, {{1, 1}}), 1, x) == x);
  CHECK_THROWS_AS(subsequence(m, 3, x), InvalidArgument);
}

TEST_CASE("routed subsequences interleave back into the input") {
  SeededRng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t l = 1 + rng.uniform_below(5);
    std::uint64_t tables = 1;
    for (std::size_t i = 0; i < 2 * l; ++i) tables *= l;
    const Automaton m = from_code(l, 1 + rng.uniform_below(l), rng.uniform_below(tables));
    BitVector x(1 + rng.uniform_below(300));
    for (auto& b : x) b = static_cast<Bit>(rng.uniform_below(2));

    const RunTrace trace = run_trace(m, {}, x);
    std::vector<BitVector> routed(l + 1);
    std::vector<std::size_t> cursor(l + 1, 0);
    std::uint64_t total = 0;
    for (std::size_t q = 1; q <= l; ++q) {
      routed[q] = subsequence(m, q, x);
      total += routed[q].size();
    }
    REQUIRE(total == x.size());
    for (std::size_t t = 0; t < x.size(); ++t) {
      const std::size_t q = trace.states[t];
      CHECK(routed[q][cursor[q]++] == x[t]);
    }
  }
}

TEST_CASE("automaton JSON") {
  const AutomatonFile file{Automaton::counter(3), {3}};
  const std::string text = to_json_text(file);
  const AutomatonFile back = parse_automaton_json(text);
  CHECK(back.machine == file.machine);
  CHECK(back.bad == file.bad);

  const AutomatonFile parsed = parse_automaton_json(R"({"states": 2, "start": 1, "delta": [[1, 2], [1, 2]], "bad": [2]})");
  CHECK(parsed.machine == Automaton::counter(2));
  CHECK_THROWS_AS(parse_automaton_json("{"), ParseError);
  CHECK_THROWS_AS(parse_automaton_json(R"({"states": 2, "start": 1, "delta": [[1, 3], [1, 2]], "bad": [2]})"),
                  InvalidArgument);
  CHECK_THROWS_AS(parse_automaton_json(R"({"states": 2, "start": 1, "delta": [[1, 2], [1, 2]], "bad": [5]})"),
                  InvalidArgument);
  CHECK_THROWS_AS(parse_automaton_json(R"({"states": 2, "delta": [[1, 2], [1, 2]]})"), InvalidArgument);
}
