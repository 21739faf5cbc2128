#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "l2s/core.hpp"
#include "l2s/cslearn.hpp"
#include "l2s/lols.hpp"
#include "l2s/rng.hpp"
#include "l2s/theory/exact_model.hpp"

namespace l2s {

/// Maps an end state to its loss; the only feedback a bandit round gets.
using LossOracle = std::function<double(const StateRef& terminal)>;

struct BanditConfig {
  double epsilon = 0.1;
  double beta = 0.5;
  RegressorConfig regressor;
  TieBreak tie = TieBreak::LowestIndex;
  std::uint64_t seed = 0;
};

enum class BanditMode { Explored, Exploited };

struct ExplorationRecord {
  int t = 0;
  int action = 0;            // task action id
  std::size_t action_index = 0;
  std::size_t k = 0;         // live actions at s_t
  bool reference_rollout = false;
  std::vector<double> cost_estimate;
};

struct BanditOutcome {
  BanditMode mode = BanditMode::Exploited;
  StateRef end_state;
  double observed_loss = 0.0;
  double epsilon_draw = 0.0;
  std::size_t policy_index = 0;  // pool member followed when exploiting
  std::optional<ExplorationRecord> exploration;
};

class BanditState {
 public:
  BanditState(std::size_t dim, BanditConfig config);

  const BanditConfig& config() const noexcept { return config_; }
  std::size_t n_explore() const noexcept { return n_explore_; }
  /// Explored policies including the initial one.
  const PolicyHistory& pool() const noexcept { return pool_; }
  const CsoaaLearner& learner() const noexcept { return learner_; }
  LinearPolicy latest_policy() const { return learner_.policy(); }

 private:
  friend BanditOutcome bandit_step(BanditState&, const SearchTask&, const LossOracle&);

  BanditConfig config_;
  CsoaaLearner learner_;
  PolicyHistory pool_;
  std::size_t n_explore_ = 0;
  Rng epsilon_rng_;
  Rng explore_rng_;
  Rng exploit_rng_;
};

/// ĉ(a) = K * loss * 1[a == a_t] over the live action list.
std::vector<double> importance_weighted_costs(std::size_t k, std::size_t chosen, double loss);

/// One epsilon-greedy round. Throws LossOutOfRange when the oracle leaves [0, 1].
BanditOutcome bandit_step(BanditState& state, const SearchTask& task, const LossOracle& oracle);

nlohmann::json to_json(const BanditOutcome& o, std::size_t round);

struct ProbeResult {
  double mean = 0.0;
  double standard_error = 0.0;
  double exact = 0.0;
  std::size_t trials = 0;

  /// |mean - exact| in standard errors (0 when both sides are exact).
  double z() const;
};

/// Simulates exploration rounds with the state's latest policy held fixed and
/// averages ĉ for the action carrying `label`, against the enumerated value
///   E_{t~U(0..T-1), s~d_t}[ beta Q^ref(s, a) + (1 - beta) Q^latest(s, a) ].
/// States where no action has that label contribute zero on both sides.
/// Losses are taken from the model as-is.
ProbeResult unbiasedness_probe(const ExactModel& model, const BanditState& state, const std::string& label,
                               std::size_t trials);

/// Exploration rate (KT)^{2/3} (log(N |Pi|) / N)^{1/3}.
double theoretical_epsilon(double k, double horizon, double rounds, double log_class_size);

}  // namespace l2s
