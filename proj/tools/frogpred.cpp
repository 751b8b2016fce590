// frogpred: command-line front end over the experiment harness.
//
// Precedence for every field: command-line flag, then --config file, then
// (seed only) the FROGPRED_SEED environment variable, then the built-in default.

#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "frogpred/error.hpp"
#include "frogpred/harness.hpp"

namespace {

struct Leaf {
  std::string kind;
  std::string action;
  CLI::App* app = nullptr;
  std::vector<std::string> param_names;
  std::map<std::string, std::string> values;
  std::string config_path;
  std::string out;
  std::string stream;
  std::string mode;
  std::uint64_t trials = 1;
  std::uint64_t seed = 0;
};

Leaf& add_leaf(std::vector<std::unique_ptr<Leaf>>& leaves, CLI::App& parent, const std::string& name,
               const std::string& description, std::string kind, std::string action,
               std::vector<std::string> params, bool sampled) {
  auto leaf = std::make_unique<Leaf>();
  leaf->kind = std::move(kind);
  leaf->action = std::move(action);
  leaf->app = parent.add_subcommand(name, description);
  leaf->param_names = std::move(params);
  auto* app = leaf->app;
  app->add_option("--config", leaf->config_path, "JSON experiment config");
  app->add_option("--out", leaf->out, "directory for report.json and summary.csv");
  app->add_option("--stream", leaf->stream, "stream spec, e.g. periodic:10 or burst:eps=1/10:seed=3");
  app->add_option("--seed", leaf->seed, "master seed (default: $FROGPRED_SEED or 0)");
  if (sampled) {
    app->add_option("--mode", leaf->mode, "exact or sample")->check(CLI::IsMember({"exact", "sample"}));
    app->add_option("--trials", leaf->trials, "sampled trials");
  }
  for (const auto& p : leaf->param_names) app->add_option("--" + p, leaf->values[p]);
  leaves.push_back(std::move(leaf));
  return *leaves.back();
}

frogpred::ExperimentConfig build_config(const Leaf& leaf) {
  using frogpred::ConfigError;
  frogpred::ExperimentConfig config;
  const bool from_file = !leaf.config_path.empty();
  if (from_file) {
    config = frogpred::load_config(leaf.config_path);
    if (config.kind != leaf.kind) {
      throw ConfigError("config kind '" + config.kind + "' does not match subcommand '" + leaf.kind + "'");
    }
    if (!config.action.empty() && config.action != leaf.action) {
      throw ConfigError("config action '" + config.action + "' does not match subcommand");
    }
  } else {
    config.kind = leaf.kind;
    config.seed = frogpred::default_seed_from_env();
  }
  config.action = leaf.action;
  const auto& app = *leaf.app;
  if (app.count("--stream")) config.stream = leaf.stream;
  if (app.count("--out")) config.out = leaf.out;
  if (app.count("--seed")) config.seed = leaf.seed;
  if (app.get_option_no_throw("--mode") && app.count("--mode")) config.mode = leaf.mode;
  if (app.get_option_no_throw("--trials") && app.count("--trials")) config.trials = leaf.trials;
  for (const auto& p : leaf.param_names) {
    if (app.count("--" + p)) config.params[p] = leaf.values.at(p);
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial prediction strategies with exact probabilities"};
  app.require_subcommand(1);
  std::vector<std::unique_ptr<Leaf>> leaves;

  auto* frog = app.add_subcommand("frog", "frog-crossing strategies");
  frog->require_subcommand(1);
  add_leaf(leaves, *frog, "finite", "chip-stack strategy on one window", "frog-finite", "", {"K", "delta", "offset"}, true);
  add_leaf(leaves, *frog, "composed", "interval-composed strategy", "frog-composed", "", {"eps", "gamma", "K", "C", "rmax"},
           true);

  auto* bitpred = app.add_subcommand("bitpred", "automaton-routed bit prediction");
  bitpred->require_subcommand(1);
  add_leaf(leaves, *bitpred, "run", "evaluate the automaton predictor", "bitpred", "run",
           {"automaton", "eps", "horizon", "rmax", "K", "C", "access"}, true);
  add_leaf(leaves, *bitpred, "check", "strong accessibility of the bad set", "bitpred", "check", {"automaton"}, false);

  auto* forecast = app.add_subcommand("forecast", "density forecaster");
  forecast->require_subcommand(1);
  add_leaf(leaves, *forecast, "run", "sample forecasts", "forecast", "run", {"delta", "eps", "n"}, true);
  add_leaf(leaves, *forecast, "exact", "exact failure probability", "forecast", "exact", {"n", "eps"}, false);
  add_leaf(leaves, *forecast, "martingale", "tree martingale report", "forecast", "martingale", {"n"}, false);

  auto* streams = app.add_subcommand("streams", "stream utilities");
  streams->require_subcommand(1);
  add_leaf(leaves, *streams, "gen", "print a prefix", "streams", "gen", {"length"}, false);
  add_leaf(leaves, *streams, "density", "prefix density and running infimum", "streams", "density", {"t", "tail"}, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    for (const auto& leaf : leaves) {
      if (!leaf->app->parsed()) continue;
      const frogpred::ExperimentConfig config = build_config(*leaf);
      const frogpred::RunReport report = frogpred::run_experiment(config);
      if (!config.out.empty()) frogpred::write_report(report, config.out);
      std::cout << report.document().dump(2) << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return frogpred::exit_code_for(e);
  }
  return 1;
}
