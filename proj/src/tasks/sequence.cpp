#include "l2s/tasks/sequence.hpp"

#include <cmath>

#include "l2s/rng.hpp"

namespace l2s {

namespace {

enum Template : std::uint64_t { kBias = 1, kWord, kPrefix, kSuffix, kPrevWord, kNextWord, kPrevTag };

std::uint64_t text_id(std::string_view s) { return fnv1a(s); }

}  // namespace

SequenceTask::SequenceTask(std::uint64_t id, std::vector<std::string> words, std::optional<std::vector<int>> gold,
                           TaggingSchema schema, ReferenceQuality quality, std::uint64_t reference_seed)
    : id_(id),
      words_(std::move(words)),
      gold_(std::move(gold)),
      schema_(schema),
      quality_(quality),
      key_(reference_key(reference_seed, id)) {
  if (words_.empty()) throw Error(ErrorCode::ParseError, "empty sentence");
  if (schema_.tag_count == 0) throw Error(ErrorCode::BadConfig, "tag set is empty");
  if (gold_) {
    if (gold_->size() != words_.size()) throw Error(ErrorCode::ParseError, "gold tags and words differ in length");
    for (int t : *gold_) {
      if (t < 0 || static_cast<std::size_t>(t) >= schema_.tag_count) {
        throw Error(ErrorCode::ParseError, "gold tag outside the tag set");
      }
    }
  }
  const std::uint32_t buckets = schema_.base_dim();
  static_.resize(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    const std::string& w = words_[i];
    const std::string_view prefix = std::string_view(w).substr(0, 2);
    const std::string_view suffix = std::string_view(w).substr(w.size() >= 2 ? w.size() - 2 : 0);
    static_[i] = {hash_feature(kBias, 0, buckets),
                  hash_feature(kWord, text_id(w), buckets),
                  hash_feature(kPrefix, text_id(prefix), buckets),
                  hash_feature(kSuffix, text_id(suffix), buckets),
                  hash_feature(kPrevWord, i > 0 ? text_id(words_[i - 1]) : 0, buckets),
                  hash_feature(kNextWord, i + 1 < words_.size() ? text_id(words_[i + 1]) : 1, buckets)};
  }
}

std::size_t SequenceTask::hamming(const std::vector<int>& predicted) const {
  if (!gold_) throw Error(ErrorCode::MissingGold, "Hamming loss needs gold tags");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < predicted.size() && i < gold_->size(); ++i) wrong += predicted[i] != (*gold_)[i];
  return wrong;
}

void SequenceTask::legal_actions(const StateRef&, std::vector<int>& out) const {
  out.resize(schema_.tag_count);
  for (std::size_t a = 0; a < out.size(); ++a) out[a] = static_cast<int>(a);
}

void SequenceTask::advance(StateRef& state, int action) const {
  if (action < 0 || static_cast<std::size_t>(action) >= schema_.tag_count) {
    throw Error(ErrorCode::IllegalAction, "tag " + std::to_string(action) + " outside the tag set");
  }
  if (state.depth >= horizon()) throw Error(ErrorCode::HorizonExceeded, "sentence already fully tagged");
  state.payload.push_back(action);
  ++state.depth;
}

void SequenceTask::action_features(const StateRef& state, std::span<const int> actions,
                                   std::vector<SparseFeatures>& out) const {
  const auto i = static_cast<std::size_t>(state.depth);
  const std::uint32_t buckets = schema_.base_dim();
  std::vector<FeatureEntry> entries;
  entries.reserve(kStatic + 1);
  for (std::uint32_t f : static_[i]) entries.push_back({f, 1.0});
  const std::uint64_t prev = state.payload.empty() ? 0 : static_cast<std::uint64_t>(state.payload.back()) + 1;
  entries.push_back({hash_feature(kPrevTag, prev, buckets), 1.0});
  auto base = SparseFeatures::from_unsorted(buckets, std::move(entries));
  const double norm = std::sqrt(base.squared_norm());
  std::vector<FeatureEntry> scaled(base.entries().begin(), base.entries().end());
  for (auto& e : scaled) e.value /= norm;
  base = SparseFeatures(buckets, std::move(scaled));

  out.resize(actions.size());
  for (std::size_t k = 0; k < actions.size(); ++k) {
    out[k] = base.shifted(static_cast<std::uint32_t>(actions[k]) * buckets, schema_.feature_dim());
  }
}

double SequenceTask::terminal_loss(const StateRef& terminal) const {
  return static_cast<double>(hamming(terminal.payload));
}

int SequenceTask::reference_action(const StateRef& state, std::span<const int>) const {
  const int i = state.depth;
  const int position[] = {i};
  const auto arbitrary = [&] { return static_cast<int>(keyed_choice(key_, position, schema_.tag_count)); };
  switch (quality_) {
    case ReferenceQuality::Bad: return arbitrary();
    case ReferenceQuality::Suboptimal:
      if (i % 2 == 1) return arbitrary();
      [[fallthrough]];
    case ReferenceQuality::Optimal:
      if (!gold_) throw Error(ErrorCode::MissingGold, "reference needs gold tags");
      return (*gold_)[static_cast<std::size_t>(i)];
  }
  return 0;
}

}  // namespace l2s
