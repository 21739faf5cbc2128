#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "l2s/bandit.hpp"
#include "l2s/lols.hpp"
#include "l2s/tasks/reference.hpp"
#include "l2s/theory/exact_model.hpp"

namespace l2s {

/// Resolved experiment settings. Every field has a key in the flat
/// key=value format and a matching command-line flag.
struct ExperimentConfig {
  std::string task = "multiclass";  // sequence | multiclass | parse | model
  std::string data;
  std::string test;                 // optional held-out file
  double test_fraction = 0.2;
  std::string reference = "optimal";
  std::string roll_in = "learned";
  std::string roll_out = "mixture";
  double beta = 0.5;
  std::string granularity = "per-example";
  std::size_t passes = 5;
  std::uint64_t seed = 1;
  double eta0 = 0.5;
  std::string schedule = "invsqrt";  // invsqrt | constant
  std::string tie = "lowest";        // lowest | highest
  std::uint32_t hash_bits = 0;       // 0: task default
  std::size_t dim = 0;               // multiclass input dimension, 0: infer
  std::string tags;                  // comma-separated tag set, empty: infer
  bool average = false;              // evaluate the averaged policy
  bool include_initial = false;
  double epsilon = 0.1;
  std::size_t rounds = 10000;
  std::string model;
  std::string history;
  std::string diagnostics;
  std::string report;

  static const std::vector<std::string>& keys();
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;

  /// Lines of `key = value`; '#' starts a comment. Errors name the line.
  static ExperimentConfig parse(const std::string& text, const std::string& source = "<config>");
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Canonical "key=value" lines in key order.
  std::string canonical() const;
  /// Hash of the canonical form with the output paths cleared.
  std::uint64_t hash() const;
  nlohmann::json to_json() const;

  RolloutPlan plan() const;
  RegressorConfig regressor() const;
  TieBreak tie_break() const;
  ReferenceQuality reference_quality() const;
  std::uint32_t effective_hash_bits() const;
};

/// Task metric: the name and whether larger values are better.
struct MetricInfo {
  std::string name;
  bool higher_is_better = false;
};

MetricInfo metric_for(const std::string& task);

/// Instances of one task split into train and held-out parts.
struct Dataset {
  std::string task;
  std::size_t feature_dim = 0;
  std::vector<std::unique_ptr<SearchTask>> train;
  std::vector<std::unique_ptr<SearchTask>> test;
  std::shared_ptr<const ExactModel> model;  // task == "model"
};

/// Builds the tasks. With `with_gold` false, instances carry no labels and
/// only the label-free reference can be queried.
Dataset load_dataset(const ExperimentConfig& config, bool with_gold = true);

/// Corpus-level metric of a policy per instance.
double evaluate(const std::string& task, std::span<const std::unique_ptr<SearchTask>> tasks,
                const std::function<const Policy&(std::size_t)>& policy_for);
double evaluate(const std::string& task, std::span<const std::unique_ptr<SearchTask>> tasks, const Policy& policy);

/// Averaged-policy metric: each instance follows one history member drawn
/// from `rng`.
double evaluate_averaged(const std::string& task, std::span<const std::unique_ptr<SearchTask>> tasks,
                         const AveragedPolicy& averaged, Rng rng);

struct TrainResult {
  TrainState state;
  std::size_t instances_processed = 0;
};

/// LOLS over `passes` shuffled passes of the training split. One JSON line
/// per processed instance goes to `diagnostics` when non-null.
TrainResult train(const ExperimentConfig& config, const Dataset& data, std::ostream* diagnostics = nullptr);

/// Metric of the trained policy on the held-out split (final policy, or
/// the averaged policy when config.average is set).
double evaluate_trained(const ExperimentConfig& config, const Dataset& data, const TrainState& state);

struct GridReport {
  MetricInfo metric;
  std::uint64_t config_hash = 0;
  nlohmann::json config;
  // [roll-in][roll-out]; roll-in {reference, learned}, roll-out {reference, mixture, learned}.
  double cells[2][3] = {};
  std::uint64_t cell_seeds[2][3] = {};

  static constexpr RollIn kRows[2] = {RollIn::Reference, RollIn::Learned};
  static constexpr RollOut kCols[3] = {RollOut::Reference, RollOut::Mixture, RollOut::Learned};

  /// Row and column of the best cell.
  std::pair<int, int> best() const;
  std::string render() const;
  nlohmann::json to_json() const;
};

GridReport run_grid(const ExperimentConfig& config);
GridReport run_grid(const ExperimentConfig& config, const Dataset& data);

struct BanditReport {
  std::size_t rounds = 0;
  std::size_t explorations = 0;
  double initial_loss = 0.0;  // exploitation loss of the initial policy on the training split
  /// (round, moving average of exploitation losses) at checkpoints.
  std::vector<std::pair<std::size_t, double>> trajectory;
  double final_average = 0.0;
  nlohmann::json to_json() const;
};

/// Simulated bandit session over the training split; one JSON line per round
/// goes to `log` when non-null.
BanditReport run_bandit(const ExperimentConfig& config, std::ostream* log = nullptr);

struct TheoryOptions {
  int dims = 3;
  std::size_t models = 100;
  std::size_t pairs = 10;
  std::uint64_t seed = 1;
  double epsilon = 0.1;
  std::size_t rounds = 0;  // 0: suite default
  std::size_t trials = 100000;
};

struct TheoryReport {
  std::string suite;
  bool passed = false;
  nlohmann::json details;
};

const std::vector<std::string>& theory_suites();
TheoryReport run_theory_suite(const std::string& suite, const TheoryOptions& options);

}  // namespace l2s
