#include "frogpred/automaton.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "frogpred/error.hpp"

namespace frogpred {

Automaton::Automaton(std::size_t states, State start, std::vector<std::array<State, 2>> delta)
    : start_(start), delta_(std::move(delta)) {
  if (states == 0) throw InvalidArgument("automaton needs at least one state");
  if (delta_.size() != states) throw InvalidArgument("transition table must have one row per state");
  if (start < 1 || start > states) throw InvalidArgument("start state out of range");
  for (const auto& row : delta_) {
    for (State target : row) {
      if (target < 1 || target > states) throw InvalidArgument("transition target out of range");
    }
  }
}

Automaton Automaton::counter(std::size_t states) {
  std::vector<std::array<State, 2>> delta(states);
  for (State i = 1; i <= states; ++i) delta[i - 1] = {1, std::min(i + 1, states)};
  return Automaton(states, 1, std::move(delta));
}

namespace {

void check_states(const Automaton& machine, const StateSet& set) {
  for (auto q : set) {
    if (q < 1 || q > machine.size()) throw InvalidArgument("state " + std::to_string(q) + " is not in Q");
  }
}

}  // namespace

AutomatonFile parse_automaton_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("automaton JSON: ") + e.what(), e.byte);
  }
  try {
    const auto states = doc.at("states").get<std::size_t>();
    const auto start = doc.at("start").get<std::size_t>();
    std::vector<std::array<std::size_t, 2>> delta;
    for (const auto& row : doc.at("delta")) {
      if (row.size() != 2) throw InvalidArgument("each delta row needs exactly two entries");
      delta.push_back({row[0].get<std::size_t>(), row[1].get<std::size_t>()});
    }
    AutomatonFile file{Automaton(states, start, std::move(delta)), doc.value("bad", StateSet{})};
    check_states(file.machine, file.bad);
    std::sort(file.bad.begin(), file.bad.end());
    file.bad.erase(std::unique(file.bad.begin(), file.bad.end()), file.bad.end());
    return file;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("automaton JSON: ") + e.what());
  }
}

std::string to_json_text(const AutomatonFile& file) {
  nlohmann::json doc;
  doc["states"] = file.machine.size();
  doc["start"] = file.machine.start();
  doc["delta"] = file.machine.table();
  doc["bad"] = file.bad;
  return doc.dump();
}

AutomatonFile load_automaton(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open automaton file '" + path + "'");
  return parse_automaton_json(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
}

RunTrace run_trace(const Automaton& machine, const StateSet& bad, std::span<const Bit> prefix) {
  check_states(machine, bad);
  std::vector<bool> is_bad(machine.size() + 1, false);
  for (auto q : bad) is_bad[q] = true;

  RunTrace trace;
  trace.visits.resize(machine.size());
  trace.states.reserve(prefix.size() + 1);
  trace.bad_bits.reserve(prefix.size() + 1);
  auto q = machine.start();
  auto record = [&](std::uint64_t t) {
    trace.states.push_back(q);
    trace.visits[q - 1].push_back(t);
    trace.bad_bits.push_back(is_bad[q] ? 1 : 0);
  };
  record(0);
  for (std::uint64_t t = 1; t <= prefix.size(); ++t) {
    q = machine.next(q, prefix[t - 1]);
    record(t);
  }
  return trace;
}

Accessibility strongly_accessible(const Automaton& machine, const StateSet& bad) {
  if (bad.empty()) throw InvalidArgument("B must be nonempty");
  check_states(machine, bad);
  const std::size_t n = machine.size();

  std::vector<bool> reachable(n + 1, false);
  std::vector<Automaton::State> frontier{machine.start()};
  reachable[machine.start()] = true;
  while (!frontier.empty()) {
    const auto q = frontier.back();
    frontier.pop_back();
    for (Bit b : {Bit{0}, Bit{1}}) {
      const auto next = machine.next(q, b);
      if (!reachable[next]) {
        reachable[next] = true;
        frontier.push_back(next);
      }
    }
  }

  std::vector<std::vector<Automaton::State>> reverse(n + 1);
  for (Automaton::State q = 1; q <= n; ++q) {
    for (Bit b : {Bit{0}, Bit{1}}) reverse[machine.next(q, b)].push_back(q);
  }
  std::vector<bool> reaches_bad(n + 1, false);
  frontier.assign(bad.begin(), bad.end());
  for (auto q : bad) reaches_bad[q] = true;
  while (!frontier.empty()) {
    const auto q = frontier.back();
    frontier.pop_back();
    for (auto prev : reverse[q]) {
      if (!reaches_bad[prev]) {
        reaches_bad[prev] = true;
        frontier.push_back(prev);
      }
    }
  }

  for (Automaton::State q = 1; q <= n; ++q) {
    if (reachable[q] && !reaches_bad[q]) return Accessibility{false, q};
  }
  return Accessibility{true, std::nullopt};
}

BitVector subsequence(const Automaton& machine, Automaton::State q, std::span<const Bit> prefix) {
  if (q < 1 || q > machine.size()) throw InvalidArgument("state " + std::to_string(q) + " is not in Q");
  BitVector out;
  auto state = machine.start();
  for (Bit b : prefix) {
    if (state == q) out.push_back(b);
    state = machine.next(state, b);
  }
  return out;
}

}  // namespace frogpred
