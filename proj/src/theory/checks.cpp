#include "l2s/theory/checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace l2s {

double Lemma6Result::max_gap() const {
  return std::max({std::abs(lhs - rhs1), std::abs(lhs - rhs2), std::abs(rhs1 - rhs2)});
}

Lemma6Result check_lemma6(const ExactModel& model, const ExactPolicy& p1, const ExactPolicy& p2) {
  const auto v1 = exact_values(model, p1);
  const auto v2 = exact_values(model, p2);
  const auto d1 = state_distribution(model, p1);
  const auto d2 = state_distribution(model, p2);
  Lemma6Result r;
  r.lhs = v1[0] - v2[0];
  for (std::size_t i = 0; i < model.state_count(); ++i) {
    const int s = static_cast<int>(i);
    if (model.is_terminal(s)) continue;
    if (d1[i] != 0.0) r.rhs1 += d1[i] * (q_under(model, v2, s, p1) - v2[i]);
    if (d2[i] != 0.0) r.rhs2 += d2[i] * (v1[i] - q_under(model, v1, s, p2));
  }
  return r;
}

// ---------------------------------------------------------------------------

namespace {

// Sums f(state, probability) over every non-terminal state of every
// trajectory of `policy`, walking paths explicitly instead of using d_t.
template <typename F>
void walk_paths(const ExactModel& model, const ExactPolicy& policy, int state, double prob, F&& f) {
  if (model.is_terminal(state)) return;
  f(state, prob);
  const auto& st = model.state(state);
  const auto& row = policy.probs[static_cast<std::size_t>(state)];
  for (std::size_t a = 0; a < st.actions.size(); ++a) {
    if (row[a] != 0.0) walk_paths(model, policy, st.actions[a].next, prob * row[a], f);
  }
}

}  // namespace

BoundReport check_theorem3(const ExactModel& model, const std::vector<ExactPolicy>& trace, double beta,
                           double tolerance) {
  if (trace.empty()) throw Error(ErrorCode::TraceIncomplete, "bound check needs at least one learned policy");
  for (const auto& p : trace) {
    if (p.probs.size() != model.state_count()) {
      throw Error(ErrorCode::TraceIncomplete, "trace policy does not cover every state");
    }
  }
  const std::size_t n = trace.size();
  const int horizon = model.horizon();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double inv_nt = inv_n / horizon;

  const ExactPolicy ref = reference_policy(model);
  const auto v_ref = exact_values(model, ref);

  std::vector<std::vector<double>> values(n), dists(n);
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = exact_values(model, trace[i]);
    dists[i] = state_distribution(model, trace[i]);
  }

  BoundReport r;
  r.beta = beta;
  r.rounds = n;
  r.horizon = horizon;
  r.tolerance = tolerance;
  r.j_reference = v_ref[0];
  for (const auto& v : values) r.j_average += v[0] * inv_n;
  r.lhs_ref_term = beta * (r.j_average - r.j_reference);

  // Deviation term: per t, the class policy minimizing the averaged Q^{pi_i}.
  std::vector<std::vector<double>> zero(model.state_count());
  for (std::size_t s = 0; s < model.state_count(); ++s) zero[s].assign(model.state(static_cast<int>(s)).actions.size(), 0.0);
  double dev = 0.0;
  for (int t = 0; t < horizon; ++t) {
    auto w = zero;
    for (int s : model.states_by_depth()[static_cast<std::size_t>(t)]) {
      const auto& st = model.state(s);
      for (std::size_t i = 0; i < n; ++i) {
        const double mass = dists[i][static_cast<std::size_t>(s)];
        if (mass == 0.0) continue;
        for (std::size_t a = 0; a < st.actions.size(); ++a) {
          w[static_cast<std::size_t>(s)][a] += inv_n * mass * values[i][static_cast<std::size_t>(st.actions[a].next)];
        }
      }
    }
    dev += r.j_average - class_minimum(model, w);
  }
  r.lhs_dev_term = (1.0 - beta) * dev;

  // eps_bar from the state distributions.
  double eps = 0.0;
  auto w_all = zero;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < model.state_count(); ++s) {
      const int id = static_cast<int>(s);
      const double mass = dists[i][s];
      if (mass == 0.0 || model.is_terminal(id)) continue;
      const double q_out = beta * q_under(model, v_ref, id, trace[i]) + (1.0 - beta) * values[i][s];
      const double q_min = beta * min_q(model, v_ref, id) + (1.0 - beta) * min_q(model, values[i], id);
      eps += mass * (q_out - q_min);
      const auto& st = model.state(id);
      for (std::size_t a = 0; a < st.actions.size(); ++a) {
        const auto next = static_cast<std::size_t>(st.actions[a].next);
        w_all[s][a] += inv_nt * mass * (beta * v_ref[next] + (1.0 - beta) * values[i][next]);
      }
    }
  }
  r.eps_bar = eps * inv_nt;

  // Second route: cost-sensitive term minus mixed-min term over explicit paths.
  double cs = 0.0, mixed = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    walk_paths(model, trace[i], 0, 1.0, [&](int s, double p) {
      cs += p * (beta * q_under(model, v_ref, s, trace[i]) + (1.0 - beta) * q_under(model, values[i], s, trace[i]));
      mixed += p * (beta * min_q(model, v_ref, s) + (1.0 - beta) * min_q(model, values[i], s));
    });
  }
  r.cs_term = cs * inv_nt;
  r.mixed_min_term = mixed * inv_nt;
  r.eps_bar_alt = r.cs_term - r.mixed_min_term;

  r.ell_star = class_minimum(model, w_all);
  r.eps_class = r.ell_star - r.mixed_min_term;

  r.rhs = horizon * r.eps_bar;
  r.satisfied = r.lhs() <= r.rhs + tolerance;
  return r;
}

nlohmann::json to_json(const BoundReport& r) {
  return {{"beta", r.beta},
          {"rounds", r.rounds},
          {"horizon", r.horizon},
          {"j_average", r.j_average},
          {"j_reference", r.j_reference},
          {"lhs_ref_term", r.lhs_ref_term},
          {"lhs_dev_term", r.lhs_dev_term},
          {"lhs", r.lhs()},
          {"eps_bar", r.eps_bar},
          {"eps_bar_alt", r.eps_bar_alt},
          {"cs_term", r.cs_term},
          {"mixed_min_term", r.mixed_min_term},
          {"ell_star", r.ell_star},
          {"eps_class", r.eps_class},
          {"rhs", r.rhs},
          {"satisfied", r.satisfied}};
}

// ---------------------------------------------------------------------------

ExactRun run_lols(const ExactModel& model, const RolloutPlan& plan, std::size_t rounds, RegressorConfig config,
                  TieBreak tie) {
  ExactRun run;
  auto state = TrainState::create(model.feature_dim(), config, plan.seed, tie);
  for (std::size_t r = 0; r < rounds; ++r) {
    run.rounds.push_back(process_example(state, model, plan));
    run.policies.push_back(state.current_policy());
    run.trace.push_back(tabulate(model, run.policies.back()));
  }
  return run;
}

std::vector<std::string> policy_labels(const ExactModel& model, const ExactPolicy& policy) {
  std::vector<std::string> out;
  for (std::size_t s = 0; s < model.state_count(); ++s) {
    const int id = static_cast<int>(s);
    if (model.is_terminal(id)) continue;
    const auto& st = model.state(id);
    const auto& row = policy.probs.at(s);
    std::string label;
    for (std::size_t a = 0; a < row.size(); ++a) {
      if (row[a] == 1.0) label = st.actions[a].label;
    }
    if (label.empty()) {
      for (std::size_t a = 0; a < row.size(); ++a) {
        if (row[a] > 0.0) label += (label.empty() ? "" : "|") + st.actions[a].label;
      }
    }
    out.push_back(st.name + ":" + label);
  }
  return out;
}

std::vector<int> class_choice_of(const ExactModel& model, const ExactPolicy& policy) {
  std::vector<int> choice(model.group_count(), -1);
  for (std::size_t g = 0; g < model.group_count(); ++g) {
    const int s = model.group_states(g).front();
    const auto& row = policy.probs.at(static_cast<std::size_t>(s));
    const auto it = std::max_element(row.begin(), row.end());
    choice[g] = model.state(s).actions[static_cast<std::size_t>(it - row.begin())].feature;
  }
  return choice;
}

std::pair<double, ExactPolicy> best_one_step_deviation(const ExactModel& model,
                                                       const std::vector<int>& feature_choice) {
  double best = std::numeric_limits<double>::infinity();
  ExactPolicy best_policy;
  for (std::size_t g = 0; g < model.group_count(); ++g) {
    for (int f : model.group_signature(g)) {
      if (f == feature_choice[g]) continue;
      auto alt = feature_choice;
      alt[g] = f;
      auto table = class_policy_table(model, alt);
      const double j = exact_J(model, table);
      if (j < best) {
        best = j;
        best_policy = std::move(table);
      }
    }
  }
  return {best, best_policy};
}

namespace {

double expected_cost(const ExactPolicy& p, const DecisionRecord& rec) {
  const auto& row = p.probs[static_cast<std::size_t>(ExactModel::state_of(rec.state))];
  double c = 0.0;
  for (std::size_t a = 0; a < rec.actions.size(); ++a) c += row[static_cast<std::size_t>(rec.actions[a])] * rec.costs[a];
  return c;
}

// Enumerates the class and fills the zero-loss part of a record from a run.
void fill_zero_loss(const ExactModel& model, const ExactRun& run, Theorem1Record& rec) {
  const auto members = enumerate_policy_class(model);
  rec.class_size = members.size();
  rec.worst_zero_loss_j = -1.0;
  for (const auto& m : members) {
    double total = 0.0;
    for (const auto& round : run.rounds) {
      for (const auto& d : round.diagnostics.decisions) total += expected_cost(m.table, d);
    }
    if (total != 0.0) continue;
    rec.zero_loss_policies.push_back(policy_labels(model, m.table));
    const double j = exact_J(model, m.table);
    if (j > rec.worst_zero_loss_j) {
      rec.worst_zero_loss_j = j;
      rec.worst_zero_loss_policy = policy_labels(model, m.table);
      auto uniform = m.table;
      const int s3 = model.state_index("s3");
      auto& row = uniform.probs[static_cast<std::size_t>(s3)];
      std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(row.size()));
      rec.uniform_s3_j = exact_J(model, uniform);
    }
  }
}

void fill_example_states(const ExactModel& model, const ExactRun& run, Theorem1Record& rec) {
  std::set<int> seen;
  std::set<std::uint32_t> features;
  for (const auto& round : run.rounds) {
    rec.examples += round.examples.size();
    for (const auto& d : round.diagnostics.decisions) seen.insert(ExactModel::state_of(d.state));
    for (const auto& ex : round.examples) {
      for (const auto& x : ex.per_action_features) {
        for (const auto& e : x.entries()) features.insert(e.index);
      }
    }
  }
  for (int s : seen) rec.example_states.push_back(model.state(s).name);
  const int s3 = model.state_index("s3");
  bool absent = seen.count(s3) == 0;
  // Features that only occur at s3 must never show up in an example.
  for (const auto& a : model.state(s3).actions) {
    bool elsewhere = false;
    for (std::size_t s = 0; s < model.state_count(); ++s) {
      if (static_cast<int>(s) == s3) continue;
      for (const auto& b : model.state(static_cast<int>(s)).actions) elsewhere = elsewhere || b.feature == a.feature;
    }
    if (!elsewhere && features.count(static_cast<std::uint32_t>(a.feature)) != 0) absent = false;
  }
  rec.s3_absent = absent;
}

}  // namespace

Theorem1Record counterexample_theorem1(TieBreak adversarial, std::size_t rounds) {
  const ExactModel model = fig3a_model();
  Theorem1Record rec;
  rec.model = "fig3a";
  rec.j_reference = exact_J(model, reference_policy(model));

  RolloutPlan plan;
  plan.roll_in = RollIn::Reference;
  plan.roll_out = RollOut::Reference;
  const auto run = run_lols(model, plan, rounds);
  fill_example_states(model, run, rec);
  fill_zero_loss(model, run, rec);

  const auto dynamic = run_lols(model, plan, rounds, {}, adversarial);
  rec.adversarial_policy = policy_labels(model, dynamic.trace.back());
  rec.adversarial_j = exact_J(model, dynamic.trace.back());

  rec.passed = rec.s3_absent && rec.worst_zero_loss_j - rec.j_reference == 100.0 && rec.uniform_s3_j == 50.0 &&
               (adversarial != TieBreak::HighestIndex || rec.adversarial_j == 100.0);
  return rec;
}

Theorem1Record counterexample_theorem1_shared(std::size_t rounds, std::uint64_t seed) {
  const ExactModel model = fig3b_model();
  Theorem1Record rec;
  rec.model = "fig3b";
  rec.j_reference = exact_J(model, reference_policy(model));

  RolloutPlan plan;
  plan.roll_in = RollIn::Reference;
  plan.roll_out = RollOut::Mixture;
  plan.beta = 0.5;
  plan.seed = seed;
  const auto run = run_lols(model, plan, rounds);
  fill_example_states(model, run, rec);
  fill_zero_loss(model, run, rec);
  rec.adversarial_policy = policy_labels(model, run.trace.back());
  rec.adversarial_j = exact_J(model, run.trace.back());

  // Both start actions have identical features, so every weight vector
  // (checked on all 0/1 vectors) and every class member treat them alike.
  const StateRef start = model.start();
  std::vector<int> legal;
  model.legal_actions(start, legal);
  std::vector<SparseFeatures> phi;
  model.action_features(start, legal, phi);
  bool same = true;
  const std::size_t f = model.feature_count();
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << f); ++bits) {
    std::vector<double> w(f);
    for (std::size_t j = 0; j < f; ++j) w[j] = static_cast<double>((bits >> j) & 1u);
    for (std::size_t a = 1; a < phi.size(); ++a) same = same && phi[a].dot(w) == phi[0].dot(w);
  }
  for (const auto& m : enumerate_policy_class(model)) {
    const auto& row = m.table.probs[0];
    for (std::size_t a = 1; a < row.size(); ++a) same = same && row[a] == row[0];
  }
  rec.start_actions_inseparable = same;

  rec.passed = rec.s3_absent && rec.start_actions_inseparable && rec.worst_zero_loss_j - rec.j_reference >= 50.0;
  return rec;
}

nlohmann::json to_json(const Theorem1Record& r) {
  return {{"model", r.model},
          {"examples", r.examples},
          {"example_states", r.example_states},
          {"s3_absent", r.s3_absent},
          {"j_reference", r.j_reference},
          {"class_size", r.class_size},
          {"zero_loss_policies", r.zero_loss_policies},
          {"worst_zero_loss_policy", r.worst_zero_loss_policy},
          {"worst_zero_loss_j", r.worst_zero_loss_j},
          {"uniform_s3_j", r.uniform_s3_j},
          {"learned_policy", r.adversarial_policy},
          {"learned_j", r.adversarial_j},
          {"start_actions_inseparable", r.start_actions_inseparable},
          {"passed", r.passed}};
}

// ---------------------------------------------------------------------------

namespace {

// First round (1-based) from which the value stays equal to the final one.
template <typename T>
std::size_t settled_at(const std::vector<T>& series) {
  std::size_t at = series.size();
  while (at > 1 && series[at - 2] == series.back()) --at;
  return at;
}

}  // namespace

Theorem2Record counterexample_theorem2(double epsilon, std::size_t rounds, std::uint64_t seed) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(ErrorCode::BadConfig, "epsilon must lie in (0, 1)");
  const ExactModel model = fig3c_model(epsilon);
  Theorem2Record rec;
  rec.epsilon = epsilon;
  rec.rounds = rounds;

  RolloutPlan plan;
  plan.roll_in = RollIn::Learned;
  plan.roll_out = RollOut::Reference;
  plan.seed = seed;
  const auto ref_run = run_lols(model, plan, rounds);
  std::vector<std::vector<std::string>> labels;
  for (const auto& p : ref_run.trace) labels.push_back(policy_labels(model, p));
  rec.reference_rollout_policy = labels.back();
  rec.reference_rollout_j = exact_J(model, ref_run.trace.back());
  rec.reference_rollout_converged_at = settled_at(labels);

  auto [dev_j, dev_policy] = best_one_step_deviation(model, class_choice_of(model, ref_run.trace.back()));
  rec.best_deviation_j = dev_j;
  rec.best_deviation_policy = policy_labels(model, dev_policy);

  plan.roll_out = RollOut::Mixture;
  plan.beta = 0.5;
  const auto mix_run = run_lols(model, plan, rounds);
  std::vector<double> js;
  for (const auto& p : mix_run.trace) js.push_back(exact_J(model, p));
  rec.mixture_rollout_policy = policy_labels(model, mix_run.trace.back());
  rec.mixture_rollout_j = js.back();
  rec.mixture_reached_zero_at = js.back() == 0.0 ? settled_at(js) : 0;

  const std::vector<std::string> expected{"s1:a", "s2:d", "s3:d"};
  rec.passed = rec.reference_rollout_policy == expected &&
               std::abs(rec.reference_rollout_j - (1.0 - epsilon)) <= 1e-9 && std::abs(rec.best_deviation_j) <= 1e-9 &&
               std::abs(rec.mixture_rollout_j) <= 1e-9;
  return rec;
}

nlohmann::json to_json(const Theorem2Record& r) {
  return {{"epsilon", r.epsilon},
          {"rounds", r.rounds},
          {"reference_rollout_policy", r.reference_rollout_policy},
          {"reference_rollout_j", r.reference_rollout_j},
          {"reference_rollout_converged_at", r.reference_rollout_converged_at},
          {"best_deviation_j", r.best_deviation_j},
          {"best_deviation_policy", r.best_deviation_policy},
          {"mixture_rollout_policy", r.mixture_rollout_policy},
          {"mixture_rollout_j", r.mixture_rollout_j},
          {"mixture_reached_zero_at", r.mixture_reached_zero_at},
          {"passed", r.passed}};
}

}  // namespace l2s
