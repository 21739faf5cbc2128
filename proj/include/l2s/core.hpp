#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "l2s/error.hpp"

namespace l2s {

struct FeatureEntry {
  std::uint32_t index;
  double value;

  bool operator==(const FeatureEntry&) const = default;
};

/// Sparse vector in R^d with strictly increasing indices and finite values.
class SparseFeatures {
 public:
  SparseFeatures() = default;
  explicit SparseFeatures(std::size_t dim) : dim_(dim) {}

  /// Validating constructor; throws DimensionMismatch / NonFinite.
  SparseFeatures(std::size_t dim, std::vector<FeatureEntry> entries);

  /// Sorts, sums duplicate indices and drops exact zeros.
  static SparseFeatures from_unsorted(std::size_t dim, std::vector<FeatureEntry> entries);

  static SparseFeatures unit(std::size_t dim, std::uint32_t index, double value = 1.0);

  std::size_t dim() const noexcept { return dim_; }
  std::span<const FeatureEntry> entries() const noexcept { return entries_; }
  std::size_t nnz() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  double dot(std::span<const double> weights) const noexcept {
    double s = 0.0;
    for (const auto& e : entries_) s += weights[e.index] * e.value;
    return s;
  }

  double squared_norm() const noexcept;

  /// Copy with every index shifted by `offset` and the dimension set to `dim`.
  SparseFeatures shifted(std::uint32_t offset, std::size_t dim) const;

  bool operator==(const SparseFeatures&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<FeatureEntry> entries_;
};

/// A search state: depth plus a task-owned payload that encodes the input
/// and every prior decision. Replaying the same actions from the start
/// state must reproduce the same payload.
struct StateRef {
  std::uint64_t instance = 0;
  int depth = 0;
  std::vector<int> payload;

  bool operator==(const StateRef&) const = default;
};

/// Per-example search space. Implementations are immutable after
/// construction and safe for concurrent reads.
///
/// Actions are small task-defined integers; `legal_actions` lists the live
/// ones at a state and every other per-state quantity (features, costs,
/// chosen index) is aligned with that list.
class SearchTask {
 public:
  virtual ~SearchTask() = default;

  virtual std::uint64_t instance_id() const = 0;
  /// Every trajectory from start() reaches a terminal state after exactly T actions.
  virtual int horizon() const = 0;
  /// Upper bound K on |A(s)|.
  virtual std::size_t action_bound() const = 0;
  virtual std::size_t feature_dim() const = 0;

  virtual StateRef start() const = 0;
  virtual void legal_actions(const StateRef& state, std::vector<int>& out) const = 0;
  /// In-place transition; must increase depth by exactly one.
  virtual void advance(StateRef& state, int action) const = 0;
  virtual void action_features(const StateRef& state, std::span<const int> actions,
                               std::vector<SparseFeatures>& out) const = 0;
  /// Loss of a depth-T state; callers go through end_loss().
  virtual double terminal_loss(const StateRef& terminal) const = 0;

  virtual bool has_gold() const { return true; }
  /// The reference policy's action id at `state`. Throws MissingGold when
  /// the reference needs labels the instance does not carry.
  virtual int reference_action(const StateRef& state, std::span<const int> legal) const = 0;
};

enum class TieBreak { LowestIndex, HighestIndex };

/// Anything that picks an index into the legal-action list of a state.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::size_t choose(const SearchTask& task, const StateRef& state,
                             std::span<const int> legal) const = 0;
};

/// Linear cost-scoring policy: picks argmin_a <w, phi(s, a)>.
class LinearPolicy final : public Policy {
 public:
  LinearPolicy() = default;
  explicit LinearPolicy(std::size_t dim, TieBreak tie = TieBreak::LowestIndex)
      : weights_(dim, 0.0), tie_(tie) {}
  LinearPolicy(std::vector<double> weights, TieBreak tie = TieBreak::LowestIndex)
      : weights_(std::move(weights)), tie_(tie) {}

  std::size_t dim() const noexcept { return weights_.size(); }
  std::span<const double> weights() const noexcept { return weights_; }
  std::vector<double>& mutable_weights() noexcept { return weights_; }
  TieBreak tie_break() const noexcept { return tie_; }
  void set_tie_break(TieBreak tie) noexcept { tie_ = tie; }

  /// Index of the lowest-scoring action. Throws EmptyActionSet / DimensionMismatch.
  std::size_t act(std::span<const SparseFeatures> per_action) const;

  std::size_t choose(const SearchTask& task, const StateRef& state,
                     std::span<const int> legal) const override;

  bool operator==(const LinearPolicy& o) const { return weights_ == o.weights_ && tie_ == o.tie_; }

 private:
  std::vector<double> weights_;
  TieBreak tie_ = TieBreak::LowestIndex;
};

/// Argmin over scores with the given tie-break; shared by every learner.
std::size_t argmin_index(std::span<const double> scores, TieBreak tie);

class ReferencePolicy final : public Policy {
 public:
  std::size_t choose(const SearchTask& task, const StateRef& state,
                     std::span<const int> legal) const override;
};

class FunctionPolicy final : public Policy {
 public:
  using Fn = std::function<std::size_t(const SearchTask&, const StateRef&, std::span<const int>)>;
  explicit FunctionPolicy(Fn fn) : fn_(std::move(fn)) {}
  std::size_t choose(const SearchTask& task, const StateRef& state,
                     std::span<const int> legal) const override {
    return fn_(task, state, legal);
  }

 private:
  Fn fn_;
};

StateRef transition(const SearchTask& task, const StateRef& state, int action);

/// Runs `policy` for exactly `steps` transitions from `from`.
StateRef execute(const SearchTask& task, const Policy& policy, const StateRef& from, int steps);

/// Runs `policy` from `from` to a terminal state.
StateRef run_to_end(const SearchTask& task, const Policy& policy, const StateRef& from);

double end_loss(const SearchTask& task, const StateRef& terminal);

/// Legal actions with the NoLegalAction check applied.
std::vector<int> checked_legal_actions(const SearchTask& task, const StateRef& state);

struct TrajectoryStep {
  StateRef state;
  int action = 0;
  std::vector<SparseFeatures> per_action_features;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  double end_loss = 0.0;
};

Trajectory record_trajectory(const SearchTask& task, const Policy& policy);

/// Replays the recorded actions from the start state and returns the end loss.
double replay(const SearchTask& task, const Trajectory& trajectory);

}  // namespace l2s
