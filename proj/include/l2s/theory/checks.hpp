#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "l2s/lols.hpp"
#include "l2s/theory/exact_model.hpp"

namespace l2s {

/// J(p1) - J(p2) and the two telescoping sums over decision points:
///   rhs1 = sum_t E_{s~d_t^p1} [Q^p2(s, p1) - Q^p2(s, p2)]
///   rhs2 = sum_t E_{s~d_t^p2} [Q^p1(s, p1) - Q^p1(s, p2)]
struct Lemma6Result {
  double lhs = 0.0;
  double rhs1 = 0.0;
  double rhs2 = 0.0;

  double max_gap() const;
};

Lemma6Result check_lemma6(const ExactModel& model, const ExactPolicy& p1, const ExactPolicy& p2);

struct BoundReport {
  double beta = 0.0;
  std::size_t rounds = 0;
  int horizon = 0;
  double j_average = 0.0;
  double j_reference = 0.0;
  double lhs_ref_term = 0.0;
  double lhs_dev_term = 0.0;
  double eps_bar = 0.0;
  /// eps_bar as (cost-sensitive term) - (mixed-min term), accumulated over
  /// explicitly enumerated trajectories.
  double eps_bar_alt = 0.0;
  double cs_term = 0.0;
  double mixed_min_term = 0.0;
  /// Best single class policy on the averaged cost-sensitive objective, and
  /// its gap to the mixed-min term. Informational only.
  double ell_star = 0.0;
  double eps_class = 0.0;
  double rhs = 0.0;
  double tolerance = 1e-9;
  bool satisfied = false;

  double lhs() const { return lhs_ref_term + lhs_dev_term; }
};

nlohmann::json to_json(const BoundReport& r);

/// `trace` holds the learned policy of every round (pi_1 .. pi_N); the
/// averaged policy is the uniform mixture over it. Throws TraceIncomplete
/// when empty.
BoundReport check_theorem3(const ExactModel& model, const std::vector<ExactPolicy>& trace, double beta,
                           double tolerance = 1e-9);

struct ExactRun {
  std::vector<ExactPolicy> trace;  // after each round
  std::vector<LinearPolicy> policies;
  std::vector<ProcessResult> rounds;
};

/// Runs LOLS on a model for `rounds` passes over its single instance.
ExactRun run_lols(const ExactModel& model, const RolloutPlan& plan, std::size_t rounds,
                  RegressorConfig config = {}, TieBreak tie = TieBreak::LowestIndex);

std::vector<std::string> policy_labels(const ExactModel& model, const ExactPolicy& policy);

struct Theorem1Record {
  std::string model;
  std::size_t examples = 0;
  std::vector<std::string> example_states;
  bool s3_absent = false;
  double j_reference = 0.0;
  std::size_t class_size = 0;
  std::vector<std::vector<std::string>> zero_loss_policies;  // action labels per state
  std::vector<std::string> worst_zero_loss_policy;
  double worst_zero_loss_j = 0.0;
  double uniform_s3_j = 0.0;
  /// Learner run with the tie-break toward the failing action.
  std::vector<std::string> adversarial_policy;
  double adversarial_j = 0.0;
  /// Only for the shared-feature variant: no linear weight vector or class
  /// member distinguishes the two actions at the start state.
  bool start_actions_inseparable = false;
  bool passed = false;
};

nlohmann::json to_json(const Theorem1Record& r);

Theorem1Record counterexample_theorem1(TieBreak adversarial = TieBreak::HighestIndex, std::size_t rounds = 20);
Theorem1Record counterexample_theorem1_shared(std::size_t rounds = 20, std::uint64_t seed = 1);

struct Theorem2Record {
  double epsilon = 0.0;
  std::size_t rounds = 0;
  std::vector<std::string> reference_rollout_policy;
  double reference_rollout_j = 0.0;
  std::size_t reference_rollout_converged_at = 0;
  double best_deviation_j = 0.0;
  std::vector<std::string> best_deviation_policy;
  std::vector<std::string> mixture_rollout_policy;
  double mixture_rollout_j = 0.0;
  std::size_t mixture_reached_zero_at = 0;  // 0 when never
  bool passed = false;
};

nlohmann::json to_json(const Theorem2Record& r);

Theorem2Record counterexample_theorem2(double epsilon, std::size_t rounds = 500, std::uint64_t seed = 1);

/// Minimum J over policies that differ from `policy` in one decision group.
/// Returns the J and the deviating policy.
std::pair<double, ExactPolicy> best_one_step_deviation(const ExactModel& model, const std::vector<int>& feature_choice);

/// Group feature choices of a deterministic, class-consistent policy.
std::vector<int> class_choice_of(const ExactModel& model, const ExactPolicy& policy);

}  // namespace l2s
