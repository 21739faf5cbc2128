#include "l2s/bandit.hpp"

#include <cmath>

namespace l2s {

BanditState::BanditState(std::size_t dim, BanditConfig config)
    : config_(config),
      learner_(dim, config.regressor, config.tie),
      pool_(std::vector<double>(dim, 0.0), config.tie) {
  if (!(config.epsilon >= 0.0 && config.epsilon <= 1.0)) {
    throw Error(ErrorCode::BadConfig, "epsilon must lie in [0, 1]");
  }
  if (!(config.beta >= 0.0 && config.beta <= 1.0)) throw Error(ErrorCode::BadConfig, "beta must lie in [0, 1]");
  const Rng root(config.seed);
  epsilon_rng_ = root.substream("epsilon");
  explore_rng_ = root.substream("exploration");
  exploit_rng_ = root.substream("exploitation");
}

std::vector<double> importance_weighted_costs(std::size_t k, std::size_t chosen, double loss) {
  std::vector<double> c(k, 0.0);
  c.at(chosen) = static_cast<double>(k) * loss;
  return c;
}

namespace {

double checked_loss(const LossOracle& oracle, const StateRef& end) {
  const double loss = oracle(end);
  if (!(loss >= 0.0 && loss <= 1.0)) {
    throw Error(ErrorCode::LossOutOfRange, "bandit loss " + std::to_string(loss) + " outside [0, 1]");
  }
  return loss;
}

}  // namespace

BanditOutcome bandit_step(BanditState& state, const SearchTask& task, const LossOracle& oracle) {
  if (task.feature_dim() != state.learner_.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "task feature dimension differs from the learner's");
  }
  BanditOutcome out;
  out.epsilon_draw = state.epsilon_rng_.uniform();
  if (out.epsilon_draw >= state.config_.epsilon) {
    out.mode = BanditMode::Exploited;
    out.policy_index = state.exploit_rng_.index(state.pool_.size());
    const LinearPolicy policy = state.pool_.snapshot(out.policy_index);
    out.end_state = run_to_end(task, policy, task.start());
    out.observed_loss = checked_loss(oracle, out.end_state);
    return out;
  }

  out.mode = BanditMode::Explored;
  Rng& rng = state.explore_rng_;
  const LinearPolicy latest = state.learner_.policy();
  ExplorationRecord rec;
  rec.t = static_cast<int>(rng.index(static_cast<std::size_t>(task.horizon())));
  const StateRef s = execute(task, latest, task.start(), rec.t);
  const auto legal = checked_legal_actions(task, s);
  rec.k = legal.size();
  rec.action_index = rng.index(rec.k);
  rec.action = legal[rec.action_index];
  rec.reference_rollout = rng.bernoulli(state.config_.beta);

  const ReferencePolicy reference;
  const Policy& roll_out = rec.reference_rollout ? static_cast<const Policy&>(reference)
                                                 : static_cast<const Policy&>(latest);
  out.end_state = run_to_end(task, roll_out, transition(task, s, rec.action));
  out.observed_loss = checked_loss(oracle, out.end_state);
  rec.cost_estimate = importance_weighted_costs(rec.k, rec.action_index, out.observed_loss);

  CostSensitiveExample ex;
  task.action_features(s, legal, ex.per_action_features);
  ex.costs = rec.cost_estimate;
  ex.raw = true;
  state.learner_.update(ex);
  state.pool_.append(state.learner_.regressor().weights(), state.learner_.take_touched());
  ++state.n_explore_;
  out.policy_index = state.pool_.size() - 1;
  out.exploration = std::move(rec);
  return out;
}

nlohmann::json to_json(const BanditOutcome& o, std::size_t round) {
  nlohmann::json j{{"round", round},
                   {"mode", o.mode == BanditMode::Explored ? "explore" : "exploit"},
                   {"epsilon_draw", o.epsilon_draw},
                   {"loss", o.observed_loss},
                   {"policy", o.policy_index}};
  if (o.exploration) {
    j["t"] = o.exploration->t;
    j["a_t"] = o.exploration->action;
    j["K"] = o.exploration->k;
    j["reference_rollout"] = o.exploration->reference_rollout;
    j["cost_estimate"] = o.exploration->cost_estimate;
  }
  return j;
}

double ProbeResult::z() const {
  const double gap = std::abs(mean - exact);
  if (standard_error == 0.0) return gap == 0.0 ? 0.0 : INFINITY;
  return gap / standard_error;
}

ProbeResult unbiasedness_probe(const ExactModel& model, const BanditState& state, const std::string& label,
                               std::size_t trials) {
  const double beta = state.config().beta;
  const LinearPolicy latest = state.latest_policy();
  const ExactPolicy latest_table = tabulate(model, latest);
  const auto v_latest = exact_values(model, latest_table);
  const auto v_ref = exact_values(model, reference_policy(model));
  const auto d = state_distribution(model, latest_table);
  const int horizon = model.horizon();

  auto label_index = [&](int s) -> int {
    const auto& actions = model.state(s).actions;
    for (std::size_t a = 0; a < actions.size(); ++a) {
      if (actions[a].label == label) return static_cast<int>(a);
    }
    return -1;
  };

  ProbeResult r;
  r.trials = trials;
  for (std::size_t s = 0; s < model.state_count(); ++s) {
    const int id = static_cast<int>(s);
    if (model.is_terminal(id) || d[s] == 0.0) continue;
    const int a = label_index(id);
    if (a < 0) continue;
    const auto next = static_cast<std::size_t>(model.state(id).actions[static_cast<std::size_t>(a)].next);
    r.exact += d[s] * (beta * v_ref[next] + (1.0 - beta) * v_latest[next]) / horizon;
  }

  Rng rng = Rng(state.config().seed).substream("probe:" + label);
  const ReferencePolicy reference;
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    const int t = static_cast<int>(rng.index(static_cast<std::size_t>(horizon)));
    const StateRef s = execute(model, latest, model.start(), t);
    const auto legal = checked_legal_actions(model, s);
    const std::size_t k = legal.size();
    const std::size_t chosen = rng.index(k);
    const bool use_ref = rng.bernoulli(beta);
    const Policy& roll_out = use_ref ? static_cast<const Policy&>(reference) : static_cast<const Policy&>(latest);
    const StateRef end = run_to_end(model, roll_out, transition(model, s, legal[chosen]));
    const double loss = end_loss(model, end);
    const int target = label_index(ExactModel::state_of(s));
    const double c = target == static_cast<int>(chosen) ? static_cast<double>(k) * loss : 0.0;
    sum += c;
    sum_sq += c * c;
  }
  const double n = static_cast<double>(trials);
  r.mean = sum / n;
  const double var = trials > 1 ? std::max(0.0, (sum_sq - n * r.mean * r.mean) / (n - 1.0)) : 0.0;
  r.standard_error = std::sqrt(var / n);
  return r;
}

double theoretical_epsilon(double k, double horizon, double rounds, double log_class_size) {
  return std::pow(k * horizon, 2.0 / 3.0) * std::cbrt((std::log(rounds) + log_class_size) / rounds);
}

}  // namespace l2s
