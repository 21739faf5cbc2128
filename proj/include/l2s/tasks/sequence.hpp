#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "l2s/core.hpp"
#include "l2s/tasks/reference.hpp"

namespace l2s {

struct TaggingSchema {
  std::size_t tag_count = 0;
  std::uint32_t hash_bits = 12;

  std::uint32_t base_dim() const { return std::uint32_t{1} << hash_bits; }
  std::size_t feature_dim() const { return tag_count * base_dim(); }
};

/// Left-to-right tagging: one decision per token, actions are all tags.
///
/// Base features of position i (hashed, unit norm): bias, word, 2-char
/// prefix and suffix, previous and next word, previous predicted tag. Each
/// tag gets its own block of the base vector.
class SequenceTask final : public SearchTask {
 public:
  SequenceTask(std::uint64_t id, std::vector<std::string> words, std::optional<std::vector<int>> gold,
               TaggingSchema schema, ReferenceQuality quality = ReferenceQuality::Optimal,
               std::uint64_t reference_seed = 0);

  std::size_t length() const noexcept { return words_.size(); }
  const std::vector<std::string>& words() const noexcept { return words_; }
  const std::optional<std::vector<int>>& gold() const noexcept { return gold_; }
  const TaggingSchema& schema() const noexcept { return schema_; }

  /// Tags predicted so far.
  static const std::vector<int>& tags_of(const StateRef& s) { return s.payload; }
  std::size_t hamming(const std::vector<int>& predicted) const;

  std::uint64_t instance_id() const override { return id_; }
  int horizon() const override { return static_cast<int>(words_.size()); }
  std::size_t action_bound() const override { return schema_.tag_count; }
  std::size_t feature_dim() const override { return schema_.feature_dim(); }
  StateRef start() const override { return StateRef{id_, 0, {}}; }
  void legal_actions(const StateRef& state, std::vector<int>& out) const override;
  void advance(StateRef& state, int action) const override;
  void action_features(const StateRef& state, std::span<const int> actions,
                       std::vector<SparseFeatures>& out) const override;
  double terminal_loss(const StateRef& terminal) const override;
  bool has_gold() const override { return gold_.has_value(); }
  int reference_action(const StateRef& state, std::span<const int> legal) const override;

 private:
  static constexpr std::size_t kStatic = 6;

  std::uint64_t id_;
  std::vector<std::string> words_;
  std::optional<std::vector<int>> gold_;
  TaggingSchema schema_;
  ReferenceQuality quality_;
  std::uint64_t key_;
  std::vector<std::array<std::uint32_t, kStatic>> static_;
};

}  // namespace l2s
