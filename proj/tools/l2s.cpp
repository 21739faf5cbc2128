#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "l2s/experiment.hpp"
#include "l2s/tasks/data.hpp"

namespace {

using l2s::ErrorCode;
using l2s::ExperimentConfig;

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitTheory = 3;

// Config sources, applied in order: file, --set pairs, then per-key flags.
struct ConfigFlags {
  std::string file;
  std::vector<std::string> assignments;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App& app) {
    app.add_option("--config", file, "key=value config file")->check(CLI::ExistingFile);
    app.add_option("--set", assignments, "override one key, as key=value");
    for (const auto& key : ExperimentConfig::keys()) {
      std::string names = "--" + key;
      if (key.find('_') != std::string::npos) {
        std::string dashed = key;
        std::replace(dashed.begin(), dashed.end(), '_', '-');
        names += ",--" + dashed;
      }
      options[key] = app.add_option(names, values[key], "config key " + key);
    }
  }

  ExperimentConfig resolve() const {
    ExperimentConfig c = file.empty() ? ExperimentConfig{} : ExperimentConfig::load(file);
    for (const auto& a : assignments) {
      const auto eq = a.find('=');
      if (eq == std::string::npos) throw l2s::Error(ErrorCode::BadConfig, "--set expects key=value, got '" + a + "'");
      c.set(a.substr(0, eq), a.substr(eq + 1));
    }
    for (const auto& [key, opt] : options) {
      if (opt->count() > 0) c.set(key, values.at(key));
    }
    return c;
  }
};

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw l2s::Error(ErrorCode::IoError, "cannot write " + path);
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
}

nlohmann::json header(const ExperimentConfig& c) {
  return {{"config_hash", c.hash()}, {"config", c.to_json()}};
}

int cmd_train(const ExperimentConfig& c) {
  if (c.model.empty()) throw l2s::Error(ErrorCode::BadConfig, "train needs an output path in 'model'");
  const auto data = l2s::load_dataset(c);
  std::optional<std::ofstream> diag;
  if (!c.diagnostics.empty()) diag = open_output(c.diagnostics);
  const auto result = l2s::train(c, data, diag ? &*diag : nullptr);
  l2s::save_model(c.model, result.state.learner.regressor(), c.hash());
  write_text(c.model + ".cfg", c.canonical());
  if (!c.history.empty()) result.state.history.save(c.history);

  auto summary = header(c);
  summary["instances"] = result.instances_processed;
  summary["model"] = c.model;
  if (!data.test.empty()) {
    summary["metric"] = l2s::metric_for(c.task).name;
    summary["value"] = l2s::evaluate_trained(c, data, result.state);
  }
  std::cout << summary.dump() << '\n';
  return 0;
}

int cmd_eval(const ExperimentConfig& c) {
  if (c.model.empty()) throw l2s::Error(ErrorCode::BadConfig, "eval needs a model file in 'model'");
  const auto file = l2s::load_model(c.model);
  const auto data = l2s::load_dataset(c);
  if (file.regressor.dim() != data.feature_dim) {
    throw l2s::Error(ErrorCode::ModelTaskMismatch, "model dimension " + std::to_string(file.regressor.dim()) +
                                                       " does not match the task dimension " +
                                                       std::to_string(data.feature_dim));
  }
  auto summary = header(c);
  summary["model_config_hash"] = file.config_hash;
  summary["metric"] = l2s::metric_for(c.task).name;
  summary["instances"] = data.test.size();
  if (c.average) {
    if (c.history.empty()) throw l2s::Error(ErrorCode::BadConfig, "averaged evaluation needs 'history'");
    const auto history = l2s::PolicyHistory::load(c.history);
    if (history.dim() != data.feature_dim) {
      throw l2s::Error(ErrorCode::ModelTaskMismatch, "history dimension does not match the task");
    }
    const l2s::AveragedPolicy avg(history, c.include_initial);
    summary["value"] = l2s::evaluate_averaged(c.task, data.test, avg, l2s::Rng(c.seed).substream("averaging"));
  } else {
    const std::vector<double> w(file.regressor.weights().begin(), file.regressor.weights().end());
    summary["value"] = l2s::evaluate(c.task, data.test, l2s::LinearPolicy(w, c.tie_break()));
  }
  std::cout << summary.dump() << '\n';
  return 0;
}

int cmd_grid(const ExperimentConfig& c) {
  const auto report = l2s::run_grid(c);
  std::cout << "config " << std::hex << c.hash() << std::dec << '\n' << report.render();
  if (!c.report.empty()) write_text(c.report, report.to_json().dump(2) + "\n");
  return 0;
}

int cmd_bandit(const ExperimentConfig& c) {
  std::optional<std::ofstream> log;
  if (!c.diagnostics.empty()) log = open_output(c.diagnostics);
  const auto report = l2s::run_bandit(c, log ? &*log : nullptr);
  auto out = header(c);
  out["report"] = report.to_json();
  std::cout << out.dump() << '\n';
  return 0;
}

struct GenOptions {
  std::string kind = "multiclass";
  std::string out;
  std::size_t count = 100;
  std::uint64_t seed = 1;
  std::size_t classes = 10;
  std::size_t dim = 20;
  std::size_t tags = 8;
  double spread = 0.5;
  bool zero_one = false;
};

int cmd_gen(const GenOptions& g) {
  if (g.kind == "sequence") {
    l2s::SequenceGenOptions o;
    o.tags = g.tags;
    l2s::write_tsv(g.out, l2s::generate_sequences(g.count, g.seed, o));
  } else if (g.kind == "trees") {
    l2s::write_tsv(g.out, l2s::generate_trees(g.count, g.seed));
  } else {
    l2s::MulticlassGenOptions o;
    o.classes = g.classes;
    o.dim = g.dim;
    o.spread = g.spread;
    o.graded_costs = !g.zero_one;
    l2s::write_multiclass_csv(g.out, l2s::generate_multiclass(g.count, g.seed, o));
  }
  std::cout << nlohmann::json{{"kind", g.kind}, {"count", g.count}, {"seed", g.seed}, {"out", g.out}}.dump() << '\n';
  return 0;
}

int exit_code_for(ErrorCode code) { return code == ErrorCode::BadConfig ? kExitConfig : kExitData; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning-to-search experiments"};
  app.require_subcommand(1);

  ConfigFlags train_flags, eval_flags, grid_flags, bandit_flags;
  auto* train = app.add_subcommand("train", "train a policy and write the model file");
  train_flags.attach(*train);
  auto* eval = app.add_subcommand("eval", "evaluate a saved model on the held-out split");
  eval_flags.attach(*eval);
  auto* grid = app.add_subcommand("grid", "run the roll-in by roll-out grid");
  grid_flags.attach(*grid);
  auto* bandit = app.add_subcommand("bandit", "simulate bandit-feedback training");
  bandit_flags.attach(*bandit);

  std::string suite;
  l2s::TheoryOptions topt;
  auto* theory = app.add_subcommand("theory", "run exact checks on small models");
  theory->add_option("suite", suite, "suite to run")->required()->check(CLI::IsMember(l2s::theory_suites()));
  theory->add_option("--T,--dims", topt.dims, "hypercube dimension for the snake suite");
  theory->add_option("--models", topt.models, "random models per check");
  theory->add_option("--pairs", topt.pairs, "policy pairs per model");
  theory->add_option("--seed", topt.seed, "seed");
  theory->add_option("--eps,--epsilon", topt.epsilon, "epsilon of the third fixture");
  theory->add_option("--rounds", topt.rounds, "training rounds (0: suite default)");
  theory->add_option("--trials", topt.trials, "Monte Carlo trials");

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "write a seeded synthetic dataset");
  gen_cmd->add_option("--kind", gen.kind, "sequence | multiclass | trees")
      ->check(CLI::IsMember({"sequence", "multiclass", "trees"}));
  gen_cmd->add_option("--out", gen.out, "output file")->required();
  gen_cmd->add_option("--count", gen.count, "number of instances");
  gen_cmd->add_option("--seed", gen.seed, "seed");
  gen_cmd->add_option("--classes", gen.classes, "multiclass label count");
  gen_cmd->add_option("--dim", gen.dim, "multiclass feature dimension");
  gen_cmd->add_option("--tags", gen.tags, "sequence tag count");
  gen_cmd->add_option("--spread", gen.spread, "multiclass cluster separation");
  gen_cmd->add_flag("--zero-one", gen.zero_one, "multiclass 0/1 costs instead of graded costs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*train) return cmd_train(train_flags.resolve());
    if (*eval) return cmd_eval(eval_flags.resolve());
    if (*grid) return cmd_grid(grid_flags.resolve());
    if (*bandit) return cmd_bandit(bandit_flags.resolve());
    if (*gen_cmd) return cmd_gen(gen);
    if (*theory) {
      const auto report = l2s::run_theory_suite(suite, topt);
      std::cout << nlohmann::json{{"suite", report.suite}, {"passed", report.passed}, {"details", report.details}}.dump(2)
                << '\n';
      return report.passed ? 0 : kExitTheory;
    }
  } catch (const l2s::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitConfig;
}
