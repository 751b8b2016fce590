#include "frogpred/harness.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iterator>
#include <optional>
#include <set>
#include <sstream>

#include "frogpred/automaton.hpp"
#include "frogpred/bitpred.hpp"
#include "frogpred/error.hpp"
#include "frogpred/forecast.hpp"
#include "frogpred/frog_composed.hpp"
#include "frogpred/frog_core.hpp"
#include "frogpred/rational.hpp"
#include "frogpred/rng.hpp"
#include "frogpred/streams.hpp"

namespace frogpred {

using nlohmann::json;

namespace {

const std::set<std::string> kKinds = {"frog-finite", "frog-composed", "bitpred", "forecast", "streams"};
const std::set<std::string> kFields = {"kind", "action", "stream", "mode", "trials", "seed", "params", "out"};

std::optional<std::uint64_t> parse_u64(std::string_view text) {
  std::uint64_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) return std::nullopt;
  return value;
}

void check_action(const ExperimentConfig& config) {
  static const std::map<std::string, std::set<std::string>> actions = {
      {"frog-finite", {""}},
      {"frog-composed", {""}},
      {"bitpred", {"", "run", "check"}},
      {"forecast", {"", "run", "exact", "martingale"}},
      {"streams", {"", "gen", "density"}},
  };
  if (!actions.at(config.kind).contains(config.action)) {
    throw ConfigError("action '" + config.action + "' is not valid for kind '" + config.kind + "'");
  }
}

std::string approx_text(const Rational& value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.17g", to_double(value));
  return buffer;
}

json rational_json(const Rational& value) {
  return json{{"exact", to_fraction_string(value)}, {"approximate", to_double(value)}};
}

std::string bits_text(std::span<const Bit> bits) {
  std::string out;
  out.reserve(bits.size());
  for (Bit b : bits) out.push_back(b ? '1' : '0');
  return out;
}

/// Reads typed parameters and rejects any that were never consumed.
class ParamReader {
 public:
  explicit ParamReader(const std::map<std::string, std::string>& params) : params_(params) {}

  std::optional<std::string> text(const std::string& key) {
    used_.insert(key);
    const auto it = params_.find(key);
    if (it == params_.end()) return std::nullopt;
    return it->second;
  }

  std::string required_text(const std::string& key) {
    auto value = text(key);
    if (!value) throw ConfigError("missing parameter '" + key + "'");
    return *value;
  }

  std::optional<Rational> rational(const std::string& key) {
    const auto value = text(key);
    if (!value) return std::nullopt;
    try {
      return parse_rational(*value);
    } catch (const ParseError& e) {
      throw ConfigError("parameter '" + key + "': " + e.what());
    }
  }

  Rational required_rational(const std::string& key) {
    if (auto value = rational(key)) return *value;
    throw ConfigError("missing parameter '" + key + "'");
  }

  std::optional<std::uint64_t> integer(const std::string& key) {
    const auto value = text(key);
    if (!value) return std::nullopt;
    if (auto parsed = parse_u64(*value)) return parsed;
    throw ConfigError("parameter '" + key + "' must be a nonnegative integer, got '" + *value + "'");
  }

  std::uint64_t required_integer(const std::string& key) {
    if (auto value = integer(key)) return *value;
    throw ConfigError("missing parameter '" + key + "'");
  }

  void finish() const {
    for (const auto& [key, value] : params_) {
      if (!used_.contains(key)) throw ConfigError("unknown parameter '" + key + "'");
    }
  }

 private:
  const std::map<std::string, std::string>& params_;
  std::set<std::string> used_;
};

struct Results {
  json body = json::object();
  std::vector<std::pair<std::string, std::string>> summary;

  void add(const std::string& key, const Rational& value) {
    summary.emplace_back(key, to_fraction_string(value));
    summary.emplace_back(key + "_approx", approx_text(value));
  }
  void add(const std::string& key, std::uint64_t value) { summary.emplace_back(key, std::to_string(value)); }
  void add(const std::string& key, const std::string& value) { summary.emplace_back(key, value); }
  void add(const std::string& key, const char* value) { summary.emplace_back(key, value); }
  void add(const std::string& key, bool value) { summary.emplace_back(key, value ? "true" : "false"); }
};

BitStream config_stream(const ExperimentConfig& config) {
  if (config.stream.empty()) throw ConfigError("experiment needs a stream spec");
  return generate(parse_stream_spec(config.stream));
}

json outcome_json(const OutcomeProbabilities& o) {
  return json{{"success", rational_json(o.success)}, {"death", rational_json(o.death)}, {"wait", rational_json(o.wait)}};
}

Results run_frog_finite(const ExperimentConfig& config, ParamReader& params) {
  const std::uint64_t K = params.required_integer("K");
  const auto threshold = RationalThreshold::from_rational(params.required_rational("delta"));
  const std::uint64_t offset = params.integer("offset").value_or(0);
  params.finish();
  if (K < 2) throw InvalidArgument("K must be at least 2");
  check_capacity(threshold, K);
  const BitStream stream = config_stream(config);
  const BitVector window = stream.window(offset + 1, K);

  Results out;
  const StepDistribution dist = chip_stack_distribution(std::span(window).first(K - 1), threshold, K);
  const OutcomeProbabilities exact = outcome_probabilities(dist, window);
  const BoundReport bounds = lemma_bounds_check(window, threshold, K);
  json steps = json::array();
  for (const auto& p : dist.step_probs) steps.push_back(rational_json(p));
  out.body["window"] = bits_text(window);
  out.body["threshold"] = {{"p", threshold.p}, {"d", threshold.d}, {"q", threshold.q}};
  out.body["exact"] = outcome_json(exact);
  out.body["step_probs"] = steps;
  out.body["p_infty"] = rational_json(dist.p_infty);
  out.body["bounds"] = {
      {"delta_prime", rational_json(bounds.delta_prime)},
      {"wait_bound", rational_json(bounds.wait_bound)},
      {"wait_status", to_string(bounds.wait_status)},
      {"death_excess", rational_json(bounds.death_excess)},
      {"death_excess_bound", rational_json(bounds.death_excess_bound)},
      {"death_excess_pass", bounds.death_excess_pass},
  };
  out.add("K", K);
  out.add("success", exact.success);
  out.add("death", exact.death);
  out.add("wait", exact.wait);

  if (config.mode == "sample") {
    std::uint64_t counts[3] = {0, 0, 0};
    json trials = json::array();
    for (std::uint64_t k = 0; k < config.trials; ++k) {
      const std::uint64_t seed = derive_seed(config.seed, k);
      const PlayOutcome play = sample_finite(stream, offset, threshold, K, seed);
      ++counts[static_cast<int>(play.result)];
      trials.push_back({{"seed", seed}, {"result", to_string(play.result)}, {"t", play.t}});
    }
    out.body["trials"] = trials;
    out.add("trials", config.trials);
    out.add("crossed_safely", counts[0]);
    out.add("squashed", counts[1]);
    out.add("waited", counts[2]);
  }
  return out;
}

Results run_frog_composed(const ExperimentConfig& config, ParamReader& params) {
  const Rational eps = params.required_rational("eps");
  const Rational gamma = params.required_rational("gamma");
  const std::uint64_t rmax = params.required_integer("rmax");
  const auto K = params.integer("K");
  const Rational C = params.rational("C").value_or(Rational(CompositionParams::kDefaultC));
  params.finish();
  const CompositionParams cp = CompositionParams::make(eps, gamma, K, C);
  const BitStream stream = config_stream(config);

  Results out;
  const CompositeReport report = composed_exact(stream, cp, rmax);
  json intervals = json::array();
  for (const auto& rec : report.intervals) {
    intervals.push_back({{"r", rec.r},
                         {"start", rec.interval.start},
                         {"end", rec.interval.end},
                         {"reach", rational_json(rec.reach)},
                         {"outcome", outcome_json(rec.outcome)}});
  }
  out.body["params"] = {{"eps", to_fraction_string(cp.eps)}, {"gamma", to_fraction_string(cp.gamma)},
                        {"eps1", to_fraction_string(cp.eps1)}, {"eps2", to_fraction_string(cp.eps2)},
                        {"K", cp.K}, {"C", to_fraction_string(C)}};
  out.body["intervals"] = intervals;
  out.body["success_total"] = rational_json(report.success_total);
  out.body["death_total"] = rational_json(report.death_total);
  out.body["residual"] = rational_json(report.residual);
  out.body["consistent"] = consistent(report);
  out.add("K", cp.K);
  out.add("rmax", rmax);
  out.add("success_total", report.success_total);
  out.add("death_total", report.death_total);
  out.add("residual", report.residual);

  if (config.mode == "sample") {
    std::uint64_t counts[3] = {0, 0, 0};
    json trials = json::array();
    for (std::uint64_t k = 0; k < config.trials; ++k) {
      const std::uint64_t seed = derive_seed(config.seed, k);
      const PlayOutcome play = sample_composed(stream, cp, seed, rmax);
      ++counts[static_cast<int>(play.result)];
      trials.push_back({{"seed", seed}, {"result", to_string(play.result)}, {"t", play.t}, {"truncated", play.truncated}});
    }
    out.body["trials"] = trials;
    out.add("trials", config.trials);
    out.add("crossed_safely", counts[0]);
    out.add("squashed", counts[1]);
    out.add("waited", counts[2]);
  }
  return out;
}

AutomatonFile load_automaton_param(const std::string& value) {
  if (value.starts_with("counter:")) {
    const auto states = parse_u64(std::string_view(value).substr(8));
    if (!states || *states == 0) throw ConfigError("counter automaton needs a positive state count");
    return AutomatonFile{Automaton::counter(*states), StateSet{*states}};
  }
  return load_automaton(value);
}

Results run_bitpred(const ExperimentConfig& config, ParamReader& params) {
  const AutomatonFile file = load_automaton_param(params.required_text("automaton"));
  Results out;
  out.body["automaton"] = json::parse(to_json_text(file));
  if (config.action == "check") {
    params.finish();
    const Accessibility acc = strongly_accessible(file.machine, file.bad);
    out.body["strongly_accessible"] = acc.strongly_accessible;
    out.body["witness"] = acc.witness ? json(*acc.witness) : json(nullptr);
    out.add("strongly_accessible", acc.strongly_accessible);
    out.add("witness", acc.witness ? std::to_string(*acc.witness) : std::string("none"));
    return out;
  }

  const Rational eps = params.required_rational("eps");
  const std::uint64_t horizon = params.required_integer("horizon");
  const std::uint64_t rmax = params.integer("rmax").value_or(10000);
  KPolicy policy = KPolicy::scaled(params.rational("C").value_or(Rational(CompositionParams::kDefaultC)));
  policy.fixed = params.integer("K");
  const std::string access_text = params.text("access").value_or("refuse");
  params.finish();
  if (access_text != "refuse" && access_text != "warn") throw ConfigError("access must be refuse or warn");
  const AccessPolicy access = access_text == "warn" ? AccessPolicy::warn : AccessPolicy::refuse;
  const BitStream stream = config_stream(config);

  const Accessibility acc = strongly_accessible(file.machine, file.bad);
  if (!acc.strongly_accessible) {
    const std::string message = "B is not strongly accessible (witness state " + std::to_string(*acc.witness) + ")";
    if (access == AccessPolicy::refuse) throw RefusalError(message);
    out.body["warning"] = message;
  }
  const Rational copy_delta = automaton_copy_delta(eps, file.machine.size());
  const CompositionParams cp = two_sided_params(copy_delta, policy);
  out.body["copy_delta"] = to_fraction_string(copy_delta);
  out.body["inner"] = {{"eps2", to_fraction_string(cp.eps2)}, {"K", cp.K}, {"policy", policy.describe()}, {"rmax", rmax}};

  const AutomatonAccount account = automaton_account(file.machine, eps, policy, rmax, stream, horizon);
  json copies = json::array();
  for (const auto& c : account.copies) {
    copies.push_back({{"state", c.state},
                      {"routed_bits", c.routed_bits},
                      {"direct_death", rational_json(c.direct.death_total)},
                      {"direct_residual", rational_json(c.direct.residual)},
                      {"complement_death", rational_json(c.complement.death_total)},
                      {"complement_residual", rational_json(c.complement.residual)}});
  }
  out.body["account"] = {{"copies", copies},
                         {"death_bound", rational_json(account.death_bound)},
                         {"silent_mass", rational_json(account.silent_mass)}};
  out.add("K", cp.K);
  out.add("horizon", horizon);
  out.add("death_bound", account.death_bound);
  out.add("silent_mass", account.silent_mass);

  if (config.mode == "sample") {
    const BitPredStats stats = evaluate_automaton_fast(file.machine, file.bad, eps, policy, rmax, stream, horizon,
                                                       config.trials, config.seed, AccessPolicy::warn);
    json trials = json::array();
    for (const auto& rec : stats.records) {
      json row = {{"seed", rec.seed}, {"verdict", to_string(rec.verdict)}};
      if (rec.prediction) {
        row["time"] = rec.prediction->time;
        row["bit"] = rec.prediction->bit;
      }
      trials.push_back(row);
    }
    out.body["trials"] = trials;
    out.body["wilson_correct"] = {stats.correct_low, stats.correct_high};
    out.add("trials", stats.trials);
    out.add("correct", stats.correct);
    out.add("incorrect", stats.incorrect);
    out.add("none", stats.none);
  }
  return out;
}

Results run_forecast(const ExperimentConfig& config, ParamReader& params) {
  Results out;
  const BitStream stream = config_stream(config);
  if (config.action == "exact" || config.action == "martingale") {
    const std::uint64_t n = params.required_integer("n");
    const std::uint64_t cap = config.action == "exact" ? kMaxExactN : kMaxMartingaleN;
    if (n == 0 || n > cap) throw CapacityError("n must lie in 1.." + std::to_string(cap) + " for forecast " + config.action);
    const BitVector prefix = stream.prefix(std::uint64_t{1} << n);
    out.add("n", n);
    if (config.action == "exact") {
      const Rational eps = params.required_rational("eps");
      params.finish();
      const Rational failure = exact_failure_probability(prefix, n, eps);
      const Rational square = expected_square_error(prefix, n);
      out.body["failure_probability"] = rational_json(failure);
      out.body["expected_square_error"] = rational_json(square);
      out.body["markov_bound"] = rational_json(square / (eps * eps));
      out.body["bound_4_over_n_eps2"] = rational_json(Rational(4) / (Rational(n) * eps * eps));
      out.add("failure_probability", failure);
      out.add("expected_square_error", square);
      return out;
    }
    params.finish();
    const MartingaleReport m = martingale_report(prefix, n);
    json levels = json::array();
    for (std::uint64_t t = 0; t < n; ++t) {
      levels.push_back({{"t", t}, {"term", rational_json(m.level_terms[t])}, {"residual", rational_json(m.level_residuals[t])}});
    }
    out.body["total"] = rational_json(m.total);
    out.body["level_sum"] = rational_json(m.level_sum);
    out.body["levels"] = levels;
    out.body["expected_square_error"] = rational_json(m.expected_square_error);
    out.body["bound"] = rational_json(m.bound);
    out.body["identity_holds"] = m.identity_holds;
    out.body["residuals_zero"] = m.residuals_zero;
    out.add("total", m.total);
    out.add("level_sum", m.level_sum);
    out.add("identity_holds", m.identity_holds);
    out.add("expected_square_error", m.expected_square_error);
    return out;
  }

  const Rational delta = params.required_rational("delta");
  const Rational eps = params.required_rational("eps");
  const auto n = params.integer("n");
  params.finish();
  const ForecastParams fp = n ? forecast_params(delta, eps, *n) : forecast_params(delta, eps);
  std::uint64_t successes = 0;
  json trials = json::array();
  for (std::uint64_t k = 0; k < config.trials; ++k) {
    const std::uint64_t seed = derive_seed(config.seed, k);
    const ScoredForecast s = score_forecast(stream, run_forecaster(stream, fp.n, seed), eps);
    successes += s.success ? 1 : 0;
    trials.push_back({{"seed", seed}, {"R", s.forecast.R}, {"S", s.forecast.S}, {"t", s.forecast.t},
                      {"N", s.forecast.N}, {"p", to_fraction_string(s.forecast.p)},
                      {"p_star", to_fraction_string(s.p_star)}, {"success", s.success}});
  }
  out.body["n"] = fp.n;
  out.body["n_overridden"] = fp.overridden;
  out.body["horizon"] = fp.horizon();
  out.body["trials"] = trials;
  out.add("n", fp.n);
  out.add("n_overridden", fp.overridden);
  out.add("trials", config.trials);
  out.add("successes", successes);
  return out;
}

Results run_streams(const ExperimentConfig& config, ParamReader& params) {
  Results out;
  const BitStream stream = config_stream(config);
  out.body["canonical_spec"] = to_string(*stream.spec());
  if (config.action == "density") {
    const std::uint64_t t = params.required_integer("t");
    const auto tail = params.integer("tail");
    params.finish();
    const DensityReport d = tail ? prefix_density(stream, t, *tail) : prefix_density(stream, t);
    out.body["density"] = rational_json(d.density);
    out.body["running_inf"] = rational_json(d.running_inf);
    out.body["tail_start"] = d.tail_start;
    out.add("t", d.t);
    out.add("ones", d.ones);
    out.add("density", d.density);
    out.add("running_inf", d.running_inf);
    return out;
  }
  const std::uint64_t length = params.required_integer("length");
  params.finish();
  if (length > (std::uint64_t{1} << 26)) throw CapacityError("streams gen is limited to 2^26 bits");
  const BitVector bits = stream.prefix(length);
  std::uint64_t ones = 0;
  for (Bit b : bits) ones += b;
  out.body["bits"] = bits_text(bits);
  out.add("length", length);
  out.add("ones", ones);
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

}  // namespace

ExperimentConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!kFields.contains(key)) throw ConfigError("unknown config field '" + key + "'");
  }
  ExperimentConfig config;
  auto string_field = [&](const char* key, std::string& target) {
    if (!doc.contains(key)) return;
    if (!doc[key].is_string()) throw ConfigError(std::string("field '") + key + "' must be a string");
    target = doc[key].get<std::string>();
  };
  auto u64_field = [&](const char* key, std::uint64_t& target) {
    if (!doc.contains(key)) return;
    const auto& v = doc[key];
    if (v.is_number_unsigned()) {
      target = v.get<std::uint64_t>();
    } else if (v.is_string()) {
      const auto parsed = parse_u64(v.get<std::string>());
      if (!parsed) throw ConfigError(std::string("field '") + key + "' must be a nonnegative integer");
      target = *parsed;
    } else {
      throw ConfigError(std::string("field '") + key + "' must be a nonnegative integer");
    }
  };
  if (!doc.contains("kind")) throw ConfigError("config needs a 'kind'");
  string_field("kind", config.kind);
  string_field("action", config.action);
  string_field("stream", config.stream);
  string_field("mode", config.mode);
  string_field("out", config.out);
  u64_field("trials", config.trials);
  u64_field("seed", config.seed);
  if (doc.contains("params")) {
    const auto& params = doc["params"];
    if (!params.is_object()) throw ConfigError("'params' must be an object");
    for (const auto& [key, value] : params.items()) {
      if (value.is_string()) {
        config.params[key] = value.get<std::string>();
      } else if (value.is_number_unsigned()) {
        config.params[key] = std::to_string(value.get<std::uint64_t>());
      } else {
        throw ConfigError("parameter '" + key + "' must be a string or a nonnegative integer");
      }
    }
  }
  if (!kKinds.contains(config.kind)) throw ConfigError("unknown experiment kind '" + config.kind + "'");
  if (config.mode != "exact" && config.mode != "sample") throw ConfigError("mode must be exact or sample");
  if (config.trials == 0) throw ConfigError("trials must be at least 1");
  check_action(config);
  return config;
}

json config_to_json(const ExperimentConfig& config) {
  return json{{"kind", config.kind},     {"action", config.action}, {"stream", config.stream},
              {"mode", config.mode},     {"trials", config.trials}, {"seed", config.seed},
              {"params", config.params}, {"out", config.out}};
}

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config JSON: ") + e.what(), e.byte);
  }
  return config_from_json(doc);
}

std::string to_config_text(const ExperimentConfig& config) { return config_to_json(config).dump(2) + "\n"; }

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  return parse_config(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
}

json RunReport::document() const { return json{{"canonical", canonical}, {"meta", meta}}; }

std::string RunReport::csv() const {
  std::ostringstream out;
  out << "field,value\n";
  for (const auto& [key, value] : summary) {
    if (value.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted;
      for (char c : value) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
      out << key << ",\"" << quoted << "\"\n";
    } else {
      out << key << ',' << value << '\n';
    }
  }
  return out.str();
}

RunReport run_experiment(const ExperimentConfig& config) {
  if (!kKinds.contains(config.kind)) throw ConfigError("unknown experiment kind '" + config.kind + "'");
  if (config.mode != "exact" && config.mode != "sample") throw ConfigError("mode must be exact or sample");
  if (config.trials == 0) throw ConfigError("trials must be at least 1");
  check_action(config);

  const auto started = std::chrono::steady_clock::now();
  ParamReader params(config.params);
  Results results;
  if (config.kind == "frog-finite") {
    results = run_frog_finite(config, params);
  } else if (config.kind == "frog-composed") {
    results = run_frog_composed(config, params);
  } else if (config.kind == "bitpred") {
    results = run_bitpred(config, params);
  } else if (config.kind == "forecast") {
    results = run_forecast(config, params);
  } else {
    results = run_streams(config, params);
  }
  const auto elapsed = std::chrono::steady_clock::now() - started;

  ExperimentConfig echo = config;
  echo.out.clear();
  RunReport report;
  report.summary = std::move(results.summary);
  json summary = json::object();
  for (const auto& [key, value] : report.summary) summary[key] = value;
  report.canonical = json{{"config", config_to_json(echo)}, {"results", std::move(results.body)}, {"summary", summary}};
  report.meta = json{{"timestamp", utc_timestamp()},
                     {"wall_time_ms", std::chrono::duration<double, std::milli>(elapsed).count()}};
  return report;
}

void write_report(const RunReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream json_out(dir / "report.json");
    if (!json_out) throw Error("cannot write " + (dir / "report.json").string());
    json_out << report.document().dump(2) << '\n';
  }
  std::ofstream csv_out(dir / "summary.csv");
  if (!csv_out) throw Error("cannot write " + (dir / "summary.csv").string());
  csv_out << report.csv();
}

int exit_code_for(const std::exception& error) {
  if (dynamic_cast<const CapacityError*>(&error)) return 3;
  if (dynamic_cast<const RefusalError*>(&error)) return 4;
  if (dynamic_cast<const ConfigError*>(&error) || dynamic_cast<const ParseError*>(&error) ||
      dynamic_cast<const InvalidSpec*>(&error) || dynamic_cast<const InvalidArgument*>(&error)) {
    return 2;
  }
  return 1;
}

std::uint64_t default_seed_from_env() {
  const char* value = std::getenv(kSeedEnvVar);
  if (!value || !*value) return 0;
  const auto parsed = parse_u64(value);
  if (!parsed) throw ConfigError(std::string(kSeedEnvVar) + " must be a nonnegative integer");
  return *parsed;
}

}  // namespace frogpred
