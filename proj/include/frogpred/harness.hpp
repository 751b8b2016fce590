#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace frogpred {

/// One experiment. File form is a single JSON object:
///
///   {"kind": "frog-finite", "action": "", "stream": "periodic:10:...", "mode": "exact",
///    "trials": 1, "seed": 0, "params": {"K": "4", "delta": "1/2"}, "out": ""}
///
/// Kinds and their parameters (all values are strings; rationals as num/den):
///   frog-finite    K, delta, [offset]
///   frog-composed  eps, gamma, rmax, [K], [C]
///   bitpred        action run:   automaton, eps, horizon, [rmax], [K], [C], [access]
///                  action check: automaton
///   forecast       action run:   delta, eps, [n]
///                  action exact: n, eps
///                  action martingale: n
///   streams        action gen: length;  action density: t, [tail]
/// `automaton` is a JSON file path or counter:<l> (bad set {l}).
struct ExperimentConfig {
  std::string kind;
  std::string action;
  std::string stream;
  std::string mode = "exact";
  std::uint64_t trials = 1;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> params;
  std::string out;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Throws ConfigError on unknown kinds, modes, fields or wrongly typed values.
ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig parse_config(const std::string& text);
std::string to_config_text(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

struct RunReport {
  /// Everything determined by (config, seed). Keys are sorted on output.
  nlohmann::json canonical;
  /// Timestamp and wall time; excluded from reproducibility comparisons.
  nlohmann::json meta;
  /// Scalar results shared between the JSON report and summary.csv.
  std::vector<std::pair<std::string, std::string>> summary;

  std::string canonical_text() const { return canonical.dump(); }
  nlohmann::json document() const;
  std::string csv() const;
};

RunReport run_experiment(const ExperimentConfig& config);

/// Writes report.json and summary.csv into `dir`, creating it if needed.
void write_report(const RunReport& report, const std::filesystem::path& dir);

/// 0 never; 2 config, parse and spec errors; 3 capacity; 4 refusal; 1 anything else.
int exit_code_for(const std::exception& error);

/// Name of the environment variable that supplies the default master seed.
inline constexpr const char* kSeedEnvVar = "FROGPRED_SEED";

/// Seed from FROGPRED_SEED, or 0 when unset. Throws ConfigError when malformed.
std::uint64_t default_seed_from_env();

}  // namespace frogpred
