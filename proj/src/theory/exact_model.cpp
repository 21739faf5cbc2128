#include "l2s/theory/exact_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace l2s {

int ExactModel::add_state(const std::string& name, int depth) {
  if (state_index_.count(name) != 0) throw Error(ErrorCode::ParseError, "duplicate state '" + name + "'");
  if (depth < 0) throw Error(ErrorCode::ParseError, "negative depth for state '" + name + "'");
  const int id = static_cast<int>(states_.size());
  states_.push_back({name, depth, {}, 0.0, std::nullopt});
  state_index_[name] = id;
  finalized_ = false;
  return id;
}

int ExactModel::feature_id(const std::string& name) {
  auto it = feature_index_.find(name);
  if (it != feature_index_.end()) return it->second;
  const int id = static_cast<int>(feature_names_.size());
  feature_names_.push_back(name);
  feature_index_[name] = id;
  return id;
}

int ExactModel::state_index(const std::string& name) const {
  auto it = state_index_.find(name);
  if (it == state_index_.end()) throw Error(ErrorCode::ParseError, "unknown state '" + name + "'");
  return it->second;
}

void ExactModel::add_action(const std::string& state, const std::string& label, const std::string& next,
                            const std::string& feature) {
  auto& s = states_[static_cast<std::size_t>(state_index(state))];
  for (const auto& a : s.actions) {
    if (a.label == label) throw Error(ErrorCode::ParseError, "duplicate action '" + label + "' at '" + state + "'");
  }
  s.actions.push_back({label, state_index(next), feature_id(feature)});
  finalized_ = false;
}

void ExactModel::set_loss(const std::string& state, double loss) {
  if (!std::isfinite(loss) || loss < 0.0) {
    throw Error(ErrorCode::ParseError, "loss of '" + state + "' must be finite and non-negative");
  }
  states_[static_cast<std::size_t>(state_index(state))].loss = loss;
}

void ExactModel::set_reference(const std::string& state, const std::string& label) {
  auto& s = states_[static_cast<std::size_t>(state_index(state))];
  for (std::size_t i = 0; i < s.actions.size(); ++i) {
    if (s.actions[i].label == label) {
      s.reference = static_cast<int>(i);
      return;
    }
  }
  throw Error(ErrorCode::ParseError, "reference action '" + label + "' not declared at '" + state + "'");
}

void ExactModel::declare_shared(const std::vector<std::string>& states) {
  shared_.push_back(states);
  finalized_ = false;
}

void ExactModel::finalize() {
  if (states_.empty()) throw Error(ErrorCode::ParseError, "model has no states");
  horizon_ = 0;
  for (const auto& s : states_) horizon_ = std::max(horizon_, s.depth);
  if (horizon_ == 0) throw Error(ErrorCode::ParseError, "model needs at least one decision");

  by_depth_.assign(static_cast<std::size_t>(horizon_) + 1, {});
  int starts = 0;
  max_actions_ = 0;
  for (std::size_t i = 0; i < states_.size(); ++i) {
    const auto& s = states_[i];
    by_depth_[static_cast<std::size_t>(s.depth)].push_back(static_cast<int>(i));
    if (s.depth == 0) ++starts;
    if (s.depth < horizon_) {
      if (s.actions.empty()) throw Error(ErrorCode::ParseError, "state '" + s.name + "' has no actions");
      for (const auto& a : s.actions) {
        if (states_[static_cast<std::size_t>(a.next)].depth != s.depth + 1) {
          throw Error(ErrorCode::ParseError, "action '" + a.label + "' at '" + s.name + "' does not advance depth by one");
        }
      }
    } else if (!s.actions.empty()) {
      throw Error(ErrorCode::ParseError, "terminal state '" + s.name + "' has actions");
    }
    max_actions_ = std::max(max_actions_, s.actions.size());
  }
  if (starts != 1 || states_[0].depth != 0) {
    throw Error(ErrorCode::ParseError, "the first declared state must be the unique depth-0 state");
  }

  // Decision groups by feature signature.
  groups_.clear();
  signatures_.clear();
  group_of_.assign(states_.size(), static_cast<std::size_t>(-1));
  std::map<std::vector<int>, std::size_t> by_signature;
  for (std::size_t i = 0; i < states_.size(); ++i) {
    const auto& s = states_[i];
    if (s.depth == horizon_) continue;
    std::vector<int> sig;
    for (const auto& a : s.actions) sig.push_back(a.feature);
    std::sort(sig.begin(), sig.end());
    sig.erase(std::unique(sig.begin(), sig.end()), sig.end());
    auto [it, inserted] = by_signature.try_emplace(sig, groups_.size());
    if (inserted) {
      groups_.emplace_back();
      signatures_.push_back(sig);
    }
    groups_[it->second].push_back(static_cast<int>(i));
    group_of_[i] = it->second;
  }
  for (const auto& names : shared_) {
    for (const auto& n : names) {
      const int id = state_index(n);
      if (is_terminal(id) || group_of_[static_cast<std::size_t>(id)] != group_of_[static_cast<std::size_t>(state_index(names.front()))]) {
        throw Error(ErrorCode::ParseError, "states declared shared do not have identical action features");
      }
    }
  }
  finalized_ = true;
}

StateRef ExactModel::start() const {
  if (!finalized_) throw Error(ErrorCode::BadConfig, "ExactModel used before finalize()");
  return StateRef{instance_, 0, {0}};
}

void ExactModel::legal_actions(const StateRef& s, std::vector<int>& out) const {
  const auto& st = state(state_of(s));
  out.resize(st.actions.size());
  std::iota(out.begin(), out.end(), 0);
}

void ExactModel::advance(StateRef& s, int action) const {
  const auto& st = state(state_of(s));
  if (action < 0 || static_cast<std::size_t>(action) >= st.actions.size()) {
    throw Error(ErrorCode::IllegalAction, "action " + std::to_string(action) + " at '" + st.name + "'");
  }
  s.payload[0] = st.actions[static_cast<std::size_t>(action)].next;
  ++s.depth;
}

void ExactModel::action_features(const StateRef& s, std::span<const int> actions,
                                 std::vector<SparseFeatures>& out) const {
  const auto& st = state(state_of(s));
  out.resize(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const auto& a = st.actions.at(static_cast<std::size_t>(actions[i]));
    out[i] = SparseFeatures::unit(feature_names_.size(), static_cast<std::uint32_t>(a.feature));
  }
}

double ExactModel::terminal_loss(const StateRef& terminal) const { return state(state_of(terminal)).loss; }

int ExactModel::reference_action(const StateRef& s, std::span<const int>) const {
  const auto& st = state(state_of(s));
  if (!st.reference) throw Error(ErrorCode::MissingGold, "no reference action at '" + st.name + "'");
  return *st.reference;
}

// ---------------------------------------------------------------------------

ExactPolicy ExactPolicy::deterministic(const ExactModel& model, const std::vector<int>& choice) {
  ExactPolicy p;
  p.probs.resize(model.state_count());
  for (std::size_t i = 0; i < model.state_count(); ++i) {
    const auto& st = model.state(static_cast<int>(i));
    if (st.actions.empty()) continue;
    p.probs[i].assign(st.actions.size(), 0.0);
    p.probs[i].at(static_cast<std::size_t>(choice.at(i))) = 1.0;
  }
  return p;
}

ExactPolicy tabulate(const ExactModel& model, const Policy& policy) {
  std::vector<int> choice(model.state_count(), 0);
  std::vector<int> legal;
  for (std::size_t i = 0; i < model.state_count(); ++i) {
    const int id = static_cast<int>(i);
    if (model.is_terminal(id)) continue;
    const StateRef s{model.instance_id(), model.state(id).depth, {id}};
    model.legal_actions(s, legal);
    choice[i] = static_cast<int>(policy.choose(model, s, legal));
  }
  return ExactPolicy::deterministic(model, choice);
}

ExactPolicy reference_policy(const ExactModel& model) { return tabulate(model, ReferencePolicy{}); }

std::vector<double> exact_values(const ExactModel& model, const ExactPolicy& policy) {
  std::vector<double> v(model.state_count(), 0.0);
  const auto& layers = model.states_by_depth();
  for (int t = model.horizon(); t >= 0; --t) {
    for (int id : layers[static_cast<std::size_t>(t)]) {
      const auto& st = model.state(id);
      if (t == model.horizon()) {
        v[static_cast<std::size_t>(id)] = st.loss;
        continue;
      }
      double acc = 0.0;
      const auto& row = policy.probs.at(static_cast<std::size_t>(id));
      for (std::size_t a = 0; a < st.actions.size(); ++a) {
        if (row[a] != 0.0) acc += row[a] * v[static_cast<std::size_t>(st.actions[a].next)];
      }
      v[static_cast<std::size_t>(id)] = acc;
    }
  }
  return v;
}

std::vector<double> state_distribution(const ExactModel& model, const ExactPolicy& policy) {
  std::vector<double> d(model.state_count(), 0.0);
  d[0] = 1.0;
  const auto& layers = model.states_by_depth();
  for (int t = 0; t < model.horizon(); ++t) {
    for (int id : layers[static_cast<std::size_t>(t)]) {
      const double mass = d[static_cast<std::size_t>(id)];
      if (mass == 0.0) continue;
      const auto& st = model.state(id);
      const auto& row = policy.probs.at(static_cast<std::size_t>(id));
      for (std::size_t a = 0; a < st.actions.size(); ++a) {
        d[static_cast<std::size_t>(st.actions[a].next)] += mass * row[a];
      }
    }
  }
  return d;
}

double exact_J(const ExactModel& model, const ExactPolicy& policy) { return exact_values(model, policy)[0]; }

double exact_Q(const ExactModel& model, const ExactPolicy& policy, int state, int action) {
  const auto& st = model.state(state);
  if (model.is_terminal(state) || action < 0 || static_cast<std::size_t>(action) >= st.actions.size()) {
    throw Error(ErrorCode::IllegalAction, "Q of action " + std::to_string(action) + " at '" + st.name + "'");
  }
  return exact_values(model, policy)[static_cast<std::size_t>(st.actions[static_cast<std::size_t>(action)].next)];
}

double q_under(const ExactModel& model, const std::vector<double>& values, int state, const ExactPolicy& chooser) {
  const auto& st = model.state(state);
  const auto& row = chooser.probs.at(static_cast<std::size_t>(state));
  double acc = 0.0;
  for (std::size_t a = 0; a < st.actions.size(); ++a) {
    if (row[a] != 0.0) acc += row[a] * values[static_cast<std::size_t>(st.actions[a].next)];
  }
  return acc;
}

double min_q(const ExactModel& model, const std::vector<double>& values, int state) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& a : model.state(state).actions) best = std::min(best, values[static_cast<std::size_t>(a.next)]);
  return best;
}

std::uint64_t policy_class_size(const ExactModel& model) {
  std::uint64_t n = 1;
  for (std::size_t g = 0; g < model.group_count(); ++g) {
    const std::uint64_t k = model.group_signature(g).size();
    if (n > UINT64_MAX / k) return UINT64_MAX;
    n *= k;
  }
  return n;
}

ExactPolicy class_policy_table(const ExactModel& model, const std::vector<int>& feature_choice) {
  ExactPolicy p;
  p.probs.resize(model.state_count());
  for (std::size_t i = 0; i < model.state_count(); ++i) {
    const int id = static_cast<int>(i);
    if (model.is_terminal(id)) continue;
    const auto& st = model.state(id);
    const int f = feature_choice.at(model.group_of(id));
    auto& row = p.probs[i];
    row.assign(st.actions.size(), 0.0);
    int count = 0;
    for (const auto& a : st.actions) count += a.feature == f ? 1 : 0;
    if (count == 0) throw Error(ErrorCode::IllegalAction, "class choice not available at '" + st.name + "'");
    for (std::size_t a = 0; a < st.actions.size(); ++a) {
      if (st.actions[a].feature == f) row[a] = 1.0 / count;
    }
  }
  return p;
}

std::vector<ClassPolicy> enumerate_policy_class(const ExactModel& model, std::uint64_t limit) {
  const std::uint64_t total = policy_class_size(model);
  if (total > limit) {
    throw Error(ErrorCode::TooLarge, "policy class has " + std::to_string(total) + " members (limit " +
                                         std::to_string(limit) + ")");
  }
  std::vector<ClassPolicy> out;
  out.reserve(total);
  const std::size_t groups = model.group_count();
  std::vector<std::size_t> digit(groups, 0);
  for (std::uint64_t n = 0; n < total; ++n) {
    ClassPolicy cp;
    cp.feature_choice.resize(groups);
    for (std::size_t g = 0; g < groups; ++g) cp.feature_choice[g] = model.group_signature(g)[digit[g]];
    cp.table = class_policy_table(model, cp.feature_choice);
    out.push_back(std::move(cp));
    for (std::size_t g = 0; g < groups; ++g) {
      if (++digit[g] < model.group_signature(g).size()) break;
      digit[g] = 0;
    }
  }
  return out;
}

double class_minimum(const ExactModel& model, const std::vector<std::vector<double>>& weights) {
  double total = 0.0;
  for (std::size_t g = 0; g < model.group_count(); ++g) {
    double best = std::numeric_limits<double>::infinity();
    for (int f : model.group_signature(g)) {
      double acc = 0.0;
      for (int id : model.group_states(g)) {
        const auto& st = model.state(id);
        const auto& w = weights.at(static_cast<std::size_t>(id));
        int count = 0;
        double sum = 0.0;
        for (std::size_t a = 0; a < st.actions.size(); ++a) {
          if (st.actions[a].feature == f) {
            ++count;
            sum += w[a];
          }
        }
        acc += sum / count;
      }
      best = std::min(best, acc);
    }
    total += best;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Fixtures

namespace {

ExactModel two_level(const std::vector<std::string>& s1_features, const std::vector<std::string>& s2_features,
                     const std::vector<std::string>& s3_features, const std::vector<std::string>& s2_labels,
                     const std::vector<std::string>& s3_labels, const std::vector<double>& s2_losses,
                     const std::vector<double>& s3_losses) {
  ExactModel m;
  m.add_state("s1", 0);
  m.add_state("s2", 1);
  m.add_state("s3", 1);
  m.add_state("e1", 2);
  m.add_state("e2", 2);
  m.add_state("e3", 2);
  m.add_state("e4", 2);
  m.add_action("s1", s1_features[0] == s1_features[1] ? s1_features[0] + "_up" : s1_features[0], "s2", s1_features[0]);
  m.add_action("s1", s1_features[0] == s1_features[1] ? s1_features[1] + "_down" : s1_features[1], "s3", s1_features[1]);
  m.add_action("s2", s2_labels[0], "e1", s2_features[0]);
  m.add_action("s2", s2_labels[1], "e2", s2_features[1]);
  m.add_action("s3", s3_labels[0], "e4", s3_features[0]);
  m.add_action("s3", s3_labels[1], "e3", s3_features[1]);
  m.set_loss("e1", s2_losses[0]);
  m.set_loss("e2", s2_losses[1]);
  m.set_loss("e4", s3_losses[0]);
  m.set_loss("e3", s3_losses[1]);
  return m;
}

}  // namespace

// s1 -a-> s2 -c-> e1 (0) | -d-> e2 (10);  s1 -b-> s3 -f-> e4 (0) | -e-> e3 (100).
ExactModel fig3a_model() {
  ExactModel m = two_level({"a", "b"}, {"c", "d"}, {"f", "e"}, {"c", "d"}, {"f", "e"}, {0, 10}, {0, 100});
  m.set_reference("s1", "a");
  m.set_reference("s2", "c");
  m.set_reference("s3", "f");
  m.finalize();
  return m;
}

// As fig3a, but both actions at s1 carry the same feature.
ExactModel fig3b_model() {
  ExactModel m = two_level({"a", "a"}, {"c", "d"}, {"f", "e"}, {"c", "d"}, {"f", "e"}, {0, 10}, {0, 100});
  m.set_reference("s1", "a_up");
  m.set_reference("s2", "c");
  m.set_reference("s3", "f");
  m.finalize();
  return m;
}

// s1 -a-> s2 -c-> e1 (1) | -d-> e2 (1-eps);  s1 -b-> s3 -d-> e4 (0) | -c-> e3 (1+eps).
// s2 and s3 share features {c, d}. Actions at s3 are listed (c, d) so that
// the same feature sits at the same index in both shared states.
ExactModel fig3c_model(double epsilon) {
  ExactModel m;
  m.add_state("s1", 0);
  m.add_state("s2", 1);
  m.add_state("s3", 1);
  m.add_state("e1", 2);
  m.add_state("e2", 2);
  m.add_state("e3", 2);
  m.add_state("e4", 2);
  m.add_action("s1", "a", "s2", "a");
  m.add_action("s1", "b", "s3", "b");
  m.add_action("s2", "c", "e1", "c");
  m.add_action("s2", "d", "e2", "d");
  m.add_action("s3", "c", "e3", "c");
  m.add_action("s3", "d", "e4", "d");
  m.set_loss("e1", 1.0);
  m.set_loss("e2", 1.0 - epsilon);
  m.set_loss("e3", 1.0 + epsilon);
  m.set_loss("e4", 0.0);
  m.set_reference("s1", "a");
  m.set_reference("s2", "c");
  m.set_reference("s3", "c");
  m.declare_shared({"s2", "s3"});
  m.finalize();
  return m;
}

ExactModel random_model(Rng& rng, int max_depth, int max_branching, int feature_pool) {
  ExactModel m;
  const int depth = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(max_depth)));
  int counter = 0;
  m.add_state("n0", 0);
  std::vector<std::string> frontier{"n0"};
  for (int t = 0; t < depth; ++t) {
    std::vector<std::string> next_frontier;
    for (const auto& name : frontier) {
      const int k = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(max_branching)));
      for (int a = 0; a < k; ++a) {
        const std::string child = "n" + std::to_string(++counter);
        m.add_state(child, t + 1);
        const std::string feature = "f" + std::to_string(rng.index(static_cast<std::size_t>(feature_pool)));
        m.add_action(name, "a" + std::to_string(a), child, feature);
        next_frontier.push_back(child);
      }
      m.set_reference(name, "a" + std::to_string(rng.index(static_cast<std::size_t>(k))));
    }
    frontier = std::move(next_frontier);
  }
  for (const auto& name : frontier) m.set_loss(name, rng.uniform());
  m.finalize();
  return m;
}

}  // namespace l2s
