#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "l2s/core.hpp"
#include "l2s/tasks/reference.hpp"

namespace l2s {

/// Unlabeled arc-hybrid dependency parsing.
///
/// Tokens are 1..n and 0 is the root, which sits at the bottom of the stack.
/// The first token starts on the stack, so a parse takes exactly 2n - 1
/// transitions: n - 1 shifts and n attachments.
///   Shift: push the buffer front.
///   Left:  buffer front becomes the head of the stack top; pop. Needs a
///          non-root stack top and a non-empty buffer.
///   Right: the item below the stack top becomes its head; pop. Attaching
///          to the root is only allowed once the buffer is empty.
class ParseTask final : public SearchTask {
 public:
  static constexpr int kShift = 0;
  static constexpr int kLeft = 1;
  static constexpr int kRight = 2;

  ParseTask(std::uint64_t id, std::vector<std::string> words, std::vector<std::string> tags,
            std::optional<std::vector<int>> gold_heads, std::uint32_t hash_bits = 14,
            ReferenceQuality quality = ReferenceQuality::Optimal, std::uint64_t reference_seed = 0);

  std::size_t length() const noexcept { return words_.size(); }
  const std::optional<std::vector<int>>& gold_heads() const noexcept { return gold_; }

  /// Heads assigned so far, indexed by token - 1 (-1 when unattached).
  std::vector<int> heads_of(const StateRef& s) const;
  std::vector<int> stack_of(const StateRef& s) const;
  int buffer_of(const StateRef& s) const { return s.payload[0]; }

  /// Number of gold arcs each legal action makes unreachable.
  std::vector<int> action_costs(const StateRef& state, std::span<const int> legal) const;

  std::size_t correct_heads(const StateRef& terminal) const;

  std::uint64_t instance_id() const override { return id_; }
  int horizon() const override { return static_cast<int>(2 * words_.size() - 1); }
  std::size_t action_bound() const override { return 3; }
  std::size_t feature_dim() const override { return 3 * (std::size_t{1} << hash_bits_); }
  StateRef start() const override;
  void legal_actions(const StateRef& state, std::vector<int>& out) const override;
  void advance(StateRef& state, int action) const override;
  void action_features(const StateRef& state, std::span<const int> actions,
                       std::vector<SparseFeatures>& out) const override;
  double terminal_loss(const StateRef& terminal) const override;
  bool has_gold() const override { return gold_.has_value(); }
  int reference_action(const StateRef& state, std::span<const int> legal) const override;

 private:
  int n() const { return static_cast<int>(words_.size()); }

  std::uint64_t id_;
  std::vector<std::string> words_;
  std::vector<std::string> tags_;
  std::optional<std::vector<int>> gold_;  // head of token i at index i - 1
  std::uint32_t hash_bits_;
  ReferenceQuality quality_;
  std::uint64_t key_;
  std::vector<std::uint64_t> word_ids_;  // index 0 is the root
  std::vector<std::uint64_t> tag_ids_;
};

}  // namespace l2s
