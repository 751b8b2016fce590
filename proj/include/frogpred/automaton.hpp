#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "frogpred/stream_spec.hpp"

namespace frogpred {

/// Finite automaton over {0,1} with states 1..size().
class Automaton {
 public:
  using State = std::size_t;

  /// `delta[q-1] = {Delta(q,0), Delta(q,1)}`. Throws InvalidArgument on
  /// out-of-range entries or an empty state set.
  Automaton(std::size_t states, State start, std::vector<std::array<State, 2>> delta);

  /// States 1..l with Delta(i,1) = min(i+1, l) and Delta(i,0) = 1, start 1.
  static Automaton counter(std::size_t states);

  std::size_t size() const noexcept { return delta_.size(); }
  State start() const noexcept { return start_; }
  State next(State q, Bit bit) const noexcept { return delta_[q - 1][bit]; }
  const std::vector<std::array<State, 2>>& table() const noexcept { return delta_; }

  bool operator==(const Automaton&) const = default;

 private:
  State start_;
  std::vector<std::array<State, 2>> delta_;
};

using StateSet = std::vector<Automaton::State>;

/// Contents of an automaton JSON file:
///   {"states": l, "start": s, "delta": [[d(1,0), d(1,1)], ...], "bad": [..]}
struct AutomatonFile {
  Automaton machine;
  StateSet bad;
};

AutomatonFile parse_automaton_json(const std::string& text);
std::string to_json_text(const AutomatonFile& file);
AutomatonFile load_automaton(const std::string& path);

struct RunTrace {
  /// q_0 .. q_T
  std::vector<Automaton::State> states;
  /// visits[q-1] = sorted times t with q_t = q.
  std::vector<std::vector<std::uint64_t>> visits;
  /// bad_bits[t] = 1 iff q_t is in B.
  BitVector bad_bits;
};

RunTrace run_trace(const Automaton& machine, const StateSet& bad, std::span<const Bit> prefix);

struct Accessibility {
  bool strongly_accessible = false;
  /// A state reachable from the start that cannot reach B.
  std::optional<Automaton::State> witness;
};

/// Forward reachability from the start, backward reachability from B.
Accessibility strongly_accessible(const Automaton& machine, const StateSet& bad);

/// x^(q) as far as the prefix defines it: the bit after each visit to q.
BitVector subsequence(const Automaton& machine, Automaton::State q, std::span<const Bit> prefix);

}  // namespace frogpred
