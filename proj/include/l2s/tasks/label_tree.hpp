#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "l2s/core.hpp"
#include "l2s/tasks/reference.hpp"

namespace l2s {

/// Cost-sensitive multiclass as a walk down a binary tree over the labels.
///
/// Labels 0..k-1 are split at the midpoint (the left half gets the extra
/// label for odd sizes). Node ids follow heap order (children 2n+1, 2n+2).
/// Leaves shallower than T take a single "stay" action until depth T.
/// Action `a` at node `n` sees the input features in block 2n + a; the stay
/// action has its own bias feature in the last coordinate.
class LabelTreeTask final : public SearchTask {
 public:
  static constexpr int kLeft = 0;
  static constexpr int kRight = 1;
  static constexpr int kStay = 2;

  LabelTreeTask(std::uint64_t id, SparseFeatures input, std::optional<std::vector<double>> costs,
                std::size_t classes, ReferenceQuality quality = ReferenceQuality::Optimal,
                std::uint64_t reference_seed = 0);

  static int horizon_for(std::size_t classes);
  static std::size_t dim_for(std::size_t classes, std::size_t input_dim);

  /// Label range [lo, hi) covered by the node of a state.
  static int label_of(const StateRef& terminal) { return terminal.payload[1]; }
  static std::pair<int, int> range_of(const StateRef& s) { return {s.payload[1], s.payload[2]}; }

  const std::optional<std::vector<double>>& costs() const noexcept { return costs_; }
  std::size_t classes() const noexcept { return classes_; }

  std::uint64_t instance_id() const override { return id_; }
  int horizon() const override { return horizon_; }
  std::size_t action_bound() const override { return 2; }
  std::size_t feature_dim() const override { return dim_; }
  StateRef start() const override;
  void legal_actions(const StateRef& state, std::vector<int>& out) const override;
  void advance(StateRef& state, int action) const override;
  void action_features(const StateRef& state, std::span<const int> actions,
                       std::vector<SparseFeatures>& out) const override;
  double terminal_loss(const StateRef& terminal) const override;
  bool has_gold() const override { return costs_.has_value(); }
  int reference_action(const StateRef& state, std::span<const int> legal) const override;

 private:
  int optimal_action(const StateRef& state) const;

  std::uint64_t id_;
  SparseFeatures input_;
  std::optional<std::vector<double>> costs_;
  std::size_t classes_;
  ReferenceQuality quality_;
  std::uint64_t key_;
  int horizon_;
  std::size_t dim_;
};

}  // namespace l2s
