#include "l2s/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace l2s {

SparseFeatures::SparseFeatures(std::size_t dim, std::vector<FeatureEntry> entries)
    : dim_(dim), entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.index >= dim_) {
      throw Error(ErrorCode::DimensionMismatch,
                  "feature index " + std::to_string(e.index) + " >= dimension " + std::to_string(dim_));
    }
    if (!std::isfinite(e.value)) throw Error(ErrorCode::NonFinite, "non-finite feature value");
    if (i > 0 && entries_[i - 1].index >= e.index) {
      throw Error(ErrorCode::DimensionMismatch, "feature indices must be strictly increasing");
    }
  }
}

SparseFeatures SparseFeatures::from_unsorted(std::size_t dim, std::vector<FeatureEntry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const FeatureEntry& a, const FeatureEntry& b) { return a.index < b.index; });
  std::vector<FeatureEntry> merged;
  merged.reserve(entries.size());
  for (const auto& e : entries) {
    if (!merged.empty() && merged.back().index == e.index) {
      merged.back().value += e.value;
    } else {
      merged.push_back(e);
    }
  }
  std::erase_if(merged, [](const FeatureEntry& e) { return e.value == 0.0; });
  return SparseFeatures(dim, std::move(merged));
}

SparseFeatures SparseFeatures::unit(std::size_t dim, std::uint32_t index, double value) {
  return SparseFeatures(dim, {{index, value}});
}

double SparseFeatures::squared_norm() const noexcept {
  double s = 0.0;
  for (const auto& e : entries_) s += e.value * e.value;
  return s;
}

SparseFeatures SparseFeatures::shifted(std::uint32_t offset, std::size_t dim) const {
  SparseFeatures out;
  out.dim_ = dim;
  out.entries_.reserve(entries_.size());
  for (const auto& e : entries_) out.entries_.push_back({e.index + offset, e.value});
  if (!out.entries_.empty() && out.entries_.back().index >= dim) {
    throw Error(ErrorCode::DimensionMismatch, "shifted feature exceeds dimension");
  }
  return out;
}

std::size_t argmin_index(std::span<const double> scores, TieBreak tie) {
  if (scores.empty()) throw Error(ErrorCode::EmptyActionSet, "argmin over no actions");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] < scores[best] || (tie == TieBreak::HighestIndex && scores[i] == scores[best])) {
      best = i;
    }
  }
  return best;
}

std::size_t LinearPolicy::act(std::span<const SparseFeatures> per_action) const {
  if (per_action.empty()) throw Error(ErrorCode::EmptyActionSet, "act() with no actions");
  // Small fixed buffer avoids an allocation per decision for typical K.
  constexpr std::size_t kInline = 16;
  double inline_scores[kInline];
  std::vector<double> heap_scores;
  std::span<double> scores;
  if (per_action.size() <= kInline) {
    scores = std::span<double>(inline_scores, per_action.size());
  } else {
    heap_scores.resize(per_action.size());
    scores = heap_scores;
  }
  for (std::size_t a = 0; a < per_action.size(); ++a) {
    if (per_action[a].dim() != weights_.size()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "feature dimension " + std::to_string(per_action[a].dim()) + " != policy dimension " +
                      std::to_string(weights_.size()));
    }
    scores[a] = per_action[a].dot(weights_);
  }
  return argmin_index(scores, tie_);
}

std::size_t LinearPolicy::choose(const SearchTask& task, const StateRef& state,
                                 std::span<const int> legal) const {
  thread_local std::vector<SparseFeatures> scratch;
  task.action_features(state, legal, scratch);
  return act(scratch);
}

std::size_t ReferencePolicy::choose(const SearchTask& task, const StateRef& state,
                                    std::span<const int> legal) const {
  const int action = task.reference_action(state, legal);
  const auto it = std::find(legal.begin(), legal.end(), action);
  if (it == legal.end()) {
    throw Error(ErrorCode::IllegalAction, "reference chose illegal action " + std::to_string(action));
  }
  return static_cast<std::size_t>(it - legal.begin());
}

std::vector<int> checked_legal_actions(const SearchTask& task, const StateRef& state) {
  std::vector<int> legal;
  task.legal_actions(state, legal);
  if (legal.empty()) {
    throw Error(ErrorCode::NoLegalAction, "no legal action at depth " + std::to_string(state.depth));
  }
  return legal;
}

StateRef transition(const SearchTask& task, const StateRef& state, int action) {
  StateRef next = state;
  task.advance(next, action);
  return next;
}

StateRef execute(const SearchTask& task, const Policy& policy, const StateRef& from, int steps) {
  if (steps < 0 || from.depth + steps > task.horizon()) {
    throw Error(ErrorCode::HorizonExceeded, "executing " + std::to_string(steps) + " steps from depth " +
                                                std::to_string(from.depth) + " passes horizon " +
                                                std::to_string(task.horizon()));
  }
  StateRef state = from;
  std::vector<int> legal;
  for (int i = 0; i < steps; ++i) {
    task.legal_actions(state, legal);
    if (legal.empty()) {
      throw Error(ErrorCode::NoLegalAction, "no legal action at depth " + std::to_string(state.depth));
    }
    const std::size_t pick = policy.choose(task, state, legal);
    task.advance(state, legal[pick]);
  }
  return state;
}

StateRef run_to_end(const SearchTask& task, const Policy& policy, const StateRef& from) {
  return execute(task, policy, from, task.horizon() - from.depth);
}

double end_loss(const SearchTask& task, const StateRef& terminal) {
  if (terminal.depth != task.horizon()) {
    throw Error(ErrorCode::NotTerminal, "state at depth " + std::to_string(terminal.depth) +
                                            " is not terminal (T = " + std::to_string(task.horizon()) + ")");
  }
  return task.terminal_loss(terminal);
}

Trajectory record_trajectory(const SearchTask& task, const Policy& policy) {
  Trajectory traj;
  StateRef state = task.start();
  while (state.depth < task.horizon()) {
    TrajectoryStep step;
    step.state = state;
    const auto legal = checked_legal_actions(task, state);
    task.action_features(state, legal, step.per_action_features);
    step.action = legal[policy.choose(task, state, legal)];
    task.advance(state, step.action);
    traj.steps.push_back(std::move(step));
  }
  traj.end_loss = end_loss(task, state);
  return traj;
}

double replay(const SearchTask& task, const Trajectory& trajectory) {
  StateRef state = task.start();
  for (const auto& step : trajectory.steps) task.advance(state, step.action);
  return end_loss(task, state);
}

}  // namespace l2s
