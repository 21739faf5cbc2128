#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "l2s/core.hpp"
#include "l2s/rng.hpp"

namespace l2s {

/// Fully enumerated small search space: explicit states, transitions,
/// terminal losses and a one-hot feature id per (state, action).
///
/// It is also a SearchTask, so LOLS and the bandit learner run on it
/// directly. The state payload is the single state index.
class ExactModel final : public SearchTask {
 public:
  struct Action {
    std::string label;
    int next = -1;
    int feature = -1;
  };

  struct State {
    std::string name;
    int depth = 0;
    std::vector<Action> actions;
    double loss = 0.0;
    std::optional<int> reference;  // action index
  };

  ExactModel() = default;

  int add_state(const std::string& name, int depth);
  int feature_id(const std::string& name);
  void add_action(const std::string& state, const std::string& label, const std::string& next,
                  const std::string& feature);
  void set_loss(const std::string& state, double loss);
  void set_reference(const std::string& state, const std::string& label);
  /// Declares that the listed states must share one decision.
  void declare_shared(const std::vector<std::string>& states);

  /// Checks structural invariants and computes decision groups; call once
  /// after construction. Throws ParseError with a description on failure.
  void finalize();

  std::size_t state_count() const noexcept { return states_.size(); }
  const State& state(int id) const { return states_.at(static_cast<std::size_t>(id)); }
  int state_index(const std::string& name) const;
  std::size_t feature_count() const noexcept { return feature_names_.size(); }
  const std::string& feature_name(int id) const { return feature_names_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::vector<int>>& states_by_depth() const noexcept { return by_depth_; }
  bool is_terminal(int id) const { return state(id).depth == horizon_; }

  /// Decision groups: non-terminal states with the same set of action
  /// features must take the same decision.
  std::size_t group_count() const noexcept { return groups_.size(); }
  const std::vector<int>& group_states(std::size_t g) const { return groups_.at(g); }
  const std::vector<int>& group_signature(std::size_t g) const { return signatures_.at(g); }
  std::size_t group_of(int state) const { return group_of_.at(static_cast<std::size_t>(state)); }

  void set_instance_id(std::uint64_t id) noexcept { instance_ = id; }

  // SearchTask
  std::uint64_t instance_id() const override { return instance_; }
  int horizon() const override { return horizon_; }
  std::size_t action_bound() const override { return max_actions_; }
  std::size_t feature_dim() const override { return feature_names_.size(); }
  StateRef start() const override;
  void legal_actions(const StateRef& state, std::vector<int>& out) const override;
  void advance(StateRef& state, int action) const override;
  void action_features(const StateRef& state, std::span<const int> actions,
                       std::vector<SparseFeatures>& out) const override;
  double terminal_loss(const StateRef& terminal) const override;
  int reference_action(const StateRef& state, std::span<const int> legal) const override;

  static int state_of(const StateRef& s) { return s.payload.at(0); }

 private:
  std::vector<State> states_;
  std::map<std::string, int> state_index_;
  std::vector<std::string> feature_names_;
  std::map<std::string, int> feature_index_;
  std::vector<std::vector<std::string>> shared_;
  std::vector<std::vector<int>> by_depth_;
  std::vector<std::vector<int>> groups_;
  std::vector<std::vector<int>> signatures_;
  std::vector<std::size_t> group_of_;
  int horizon_ = 0;
  std::size_t max_actions_ = 0;
  std::uint64_t instance_ = 0;
  bool finalized_ = false;
};

/// Per-state action distribution; terminal states have empty rows.
struct ExactPolicy {
  std::vector<std::vector<double>> probs;

  static ExactPolicy deterministic(const ExactModel& model, const std::vector<int>& choice);
};

/// Tabulates any Policy on every non-terminal state.
ExactPolicy tabulate(const ExactModel& model, const Policy& policy);
ExactPolicy reference_policy(const ExactModel& model);

/// V^pi for every state: terminal loss, else expected V of the successor.
std::vector<double> exact_values(const ExactModel& model, const ExactPolicy& policy);

/// Probability of visiting each state when running pi from the start.
/// Because depth is a function of the state, restricting to depth t gives d_t^pi.
std::vector<double> state_distribution(const ExactModel& model, const ExactPolicy& policy);

double exact_J(const ExactModel& model, const ExactPolicy& policy);
double exact_Q(const ExactModel& model, const ExactPolicy& policy, int state, int action);

/// Q^pi(s, pi') for a possibly stochastic pi' given precomputed values.
double q_under(const ExactModel& model, const std::vector<double>& values, int state, const ExactPolicy& chooser);
double min_q(const ExactModel& model, const std::vector<double>& values, int state);

/// A member of the bit-vector policy class: one feature choice per decision
/// group; the policy takes (uniformly) the actions carrying that feature.
struct ClassPolicy {
  std::vector<int> feature_choice;  // per group
  ExactPolicy table;
};

/// Number of class members (saturates at UINT64_MAX).
std::uint64_t policy_class_size(const ExactModel& model);
/// Enumerates the class; throws TooLarge above `limit` members.
std::vector<ClassPolicy> enumerate_policy_class(const ExactModel& model, std::uint64_t limit = 1u << 20);
ExactPolicy class_policy_table(const ExactModel& model, const std::vector<int>& feature_choice);

/// min over the class of sum_s sum_a pi(a|s) weights[s][a]. The objective
/// is separable over decision groups, so this is exact without enumeration.
double class_minimum(const ExactModel& model, const std::vector<std::vector<double>>& weights);

// Counterexample fixtures.
ExactModel fig3a_model();
ExactModel fig3b_model();
ExactModel fig3c_model(double epsilon);

/// Random tree-shaped model with depth <= max_depth and branching in
/// [1, max_branching]; features drawn from a small shared pool so that
/// decisions collide; losses uniform in [0, 1]; arbitrary reference.
ExactModel random_model(Rng& rng, int max_depth, int max_branching, int feature_pool = 6);

/// Plain-text model DSL (see data/models/*.model).
ExactModel parse_model(const std::string& text);
ExactModel load_model_file(const std::filesystem::path& path);
std::string to_dsl(const ExactModel& model);

}  // namespace l2s
