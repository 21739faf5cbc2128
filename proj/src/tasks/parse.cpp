#include "l2s/tasks/parse.hpp"

#include <algorithm>
#include <cmath>

#include "l2s/rng.hpp"

// Payload layout: [buffer front, head of token 1..n, stack bottom..top].

namespace l2s {

namespace {

enum Template : std::uint64_t {
  kBias = 1, kS0W, kS0T, kS1W, kS1T, kB0W, kB0T, kB1W, kB1T, kS0TB0T, kS1TS0T, kS1TS0TB0T, kDist
};

constexpr std::uint64_t kNone = 0x6e6f6e65;

}  // namespace

ParseTask::ParseTask(std::uint64_t id, std::vector<std::string> words, std::vector<std::string> tags,
                     std::optional<std::vector<int>> gold_heads, std::uint32_t hash_bits, ReferenceQuality quality,
                     std::uint64_t reference_seed)
    : id_(id),
      words_(std::move(words)),
      tags_(std::move(tags)),
      gold_(std::move(gold_heads)),
      hash_bits_(hash_bits),
      quality_(quality),
      key_(reference_key(reference_seed, id)) {
  if (words_.empty()) throw Error(ErrorCode::ParseError, "empty sentence");
  if (tags_.size() != words_.size()) throw Error(ErrorCode::ParseError, "words and tags differ in length");
  if (gold_) {
    if (gold_->size() != words_.size()) throw Error(ErrorCode::ParseError, "gold heads and words differ in length");
    for (std::size_t i = 0; i < gold_->size(); ++i) {
      const int h = (*gold_)[i];
      if (h < 0 || h > n() || h == static_cast<int>(i) + 1) {
        throw Error(ErrorCode::ParseError, "invalid gold head " + std::to_string(h) + " for token " +
                                               std::to_string(i + 1));
      }
    }
  }
  word_ids_.push_back(fnv1a("<root>"));
  tag_ids_.push_back(fnv1a("<root>"));
  for (std::size_t i = 0; i < words_.size(); ++i) {
    word_ids_.push_back(fnv1a(words_[i]));
    tag_ids_.push_back(fnv1a(tags_[i]));
  }
}

StateRef ParseTask::start() const {
  StateRef s{id_, 0, {}};
  s.payload.reserve(static_cast<std::size_t>(2 * n() + 3));
  s.payload.push_back(2);
  s.payload.insert(s.payload.end(), static_cast<std::size_t>(n()), -1);
  s.payload.push_back(0);
  s.payload.push_back(1);
  return s;
}

std::vector<int> ParseTask::heads_of(const StateRef& s) const {
  return {s.payload.begin() + 1, s.payload.begin() + 1 + n()};
}

std::vector<int> ParseTask::stack_of(const StateRef& s) const {
  return {s.payload.begin() + 1 + n(), s.payload.end()};
}

void ParseTask::legal_actions(const StateRef& state, std::vector<int>& out) const {
  out.clear();
  const int b = state.payload[0];
  const std::size_t depth = state.payload.size() - 1 - static_cast<std::size_t>(n());
  const bool buffer = b <= n();
  if (buffer) out.push_back(kShift);
  if (depth >= 2 && buffer) out.push_back(kLeft);
  if (depth >= 3 || (depth == 2 && !buffer)) out.push_back(kRight);
}

void ParseTask::advance(StateRef& state, int action) const {
  if (state.depth >= horizon()) throw Error(ErrorCode::HorizonExceeded, "parse already complete");
  auto& p = state.payload;
  const int b = p[0];
  const std::size_t base = 1 + static_cast<std::size_t>(n());
  const std::size_t depth = p.size() - base;
  const bool buffer = b <= n();
  switch (action) {
    case kShift:
      if (!buffer) throw Error(ErrorCode::IllegalAction, "shift with an empty buffer");
      p.push_back(b);
      ++p[0];
      break;
    case kLeft:
      if (!(depth >= 2 && buffer)) throw Error(ErrorCode::IllegalAction, "left-arc precondition violated");
      p[static_cast<std::size_t>(p.back())] = b;
      p.pop_back();
      break;
    case kRight:
      if (!(depth >= 3 || (depth == 2 && !buffer))) {
        throw Error(ErrorCode::IllegalAction, "right-arc precondition violated");
      }
      p[static_cast<std::size_t>(p.back())] = p[p.size() - 2];
      p.pop_back();
      break;
    default: throw Error(ErrorCode::IllegalAction, "unknown parser action " + std::to_string(action));
  }
  ++state.depth;
}

void ParseTask::action_features(const StateRef& state, std::span<const int> actions,
                                std::vector<SparseFeatures>& out) const {
  const auto& p = state.payload;
  const std::size_t base_index = 1 + static_cast<std::size_t>(n());
  const std::size_t depth = p.size() - base_index;
  const int s0 = p.back();
  const int s1 = depth >= 2 ? p[p.size() - 2] : -1;
  const int b0 = p[0] <= n() ? p[0] : -1;
  const int b1 = p[0] + 1 <= n() ? p[0] + 1 : -1;
  auto word = [&](int i) { return i < 0 ? kNone : word_ids_[static_cast<std::size_t>(i)]; };
  auto tag = [&](int i) { return i < 0 ? kNone : tag_ids_[static_cast<std::size_t>(i)]; };
  std::uint64_t dist = 0;
  if (b0 >= 0) {
    const int d = b0 - s0;
    dist = d <= 2 ? static_cast<std::uint64_t>(d) : d <= 4 ? 3 : d <= 7 ? 4 : 5;
  }

  const std::uint32_t buckets = std::uint32_t{1} << hash_bits_;
  std::vector<FeatureEntry> entries{
      {hash_feature(kBias, 0, buckets), 1.0},
      {hash_feature(kS0W, word(s0), buckets), 1.0},
      {hash_feature(kS0T, tag(s0), buckets), 1.0},
      {hash_feature(kS1W, word(s1), buckets), 1.0},
      {hash_feature(kS1T, tag(s1), buckets), 1.0},
      {hash_feature(kB0W, word(b0), buckets), 1.0},
      {hash_feature(kB0T, tag(b0), buckets), 1.0},
      {hash_feature(kB1W, word(b1), buckets), 1.0},
      {hash_feature(kB1T, tag(b1), buckets), 1.0},
      {hash_feature(kS0TB0T, hash_combine(tag(s0), tag(b0)), buckets), 1.0},
      {hash_feature(kS1TS0T, hash_combine(tag(s1), tag(s0)), buckets), 1.0},
      {hash_feature(kS1TS0TB0T, hash_combine(hash_combine(tag(s1), tag(s0)), tag(b0)), buckets), 1.0},
      {hash_feature(kDist, dist, buckets), 1.0},
  };
  auto merged = SparseFeatures::from_unsorted(buckets, std::move(entries));
  const double norm = std::sqrt(merged.squared_norm());
  std::vector<FeatureEntry> scaled(merged.entries().begin(), merged.entries().end());
  for (auto& e : scaled) e.value /= norm;
  const SparseFeatures base(buckets, std::move(scaled));

  out.resize(actions.size());
  for (std::size_t k = 0; k < actions.size(); ++k) {
    out[k] = base.shifted(static_cast<std::uint32_t>(actions[k]) * buckets, feature_dim());
  }
}

std::size_t ParseTask::correct_heads(const StateRef& terminal) const {
  if (!gold_) throw Error(ErrorCode::MissingGold, "attachment score needs gold heads");
  std::size_t correct = 0;
  for (int i = 0; i < n(); ++i) correct += terminal.payload[static_cast<std::size_t>(i) + 1] == (*gold_)[static_cast<std::size_t>(i)];
  return correct;
}

double ParseTask::terminal_loss(const StateRef& terminal) const {
  return 1.0 - static_cast<double>(correct_heads(terminal)) / n();
}

std::vector<int> ParseTask::action_costs(const StateRef& state, std::span<const int> legal) const {
  if (!gold_) throw Error(ErrorCode::MissingGold, "dynamic oracle needs gold heads");
  const auto& g = *gold_;
  auto head = [&](int tok) { return g[static_cast<std::size_t>(tok) - 1]; };
  const auto& p = state.payload;
  const std::size_t base = 1 + static_cast<std::size_t>(n());
  const int b = p[0];
  const int s0 = p.back();
  const int s1 = p.size() - base >= 2 ? p[p.size() - 2] : -1;
  auto in_buffer = [&](int tok) { return tok >= b && tok <= n(); };
  // Dependents of `tok` still waiting in the buffer, optionally skipping the front.
  auto buffer_dependents = [&](int tok, int from) {
    int c = 0;
    for (int d = from; d <= n(); ++d) c += head(d) == tok;
    return c;
  };

  std::vector<int> costs(legal.size(), 0);
  for (std::size_t k = 0; k < legal.size(); ++k) {
    int c = 0;
    switch (legal[k]) {
      case kShift: {
        // b can no longer take a head from below s0 or give one to any stack item.
        for (std::size_t i = base; i < p.size(); ++i) {
          const int item = p[i];
          if (item != s0 && head(b) == item) ++c;
          if (item != 0 && head(item) == b) ++c;
        }
        break;
      }
      case kLeft: {
        const int h = head(s0);
        if (h == s1 || (in_buffer(h) && h != b)) ++c;
        c += buffer_dependents(s0, b);
        break;
      }
      case kRight: {
        if (in_buffer(head(s0))) ++c;
        c += buffer_dependents(s0, b);
        break;
      }
      default: throw Error(ErrorCode::IllegalAction, "unknown parser action");
    }
    costs[k] = c;
  }
  return costs;
}

int ParseTask::reference_action(const StateRef& state, std::span<const int> legal) const {
  if (legal.empty()) throw Error(ErrorCode::NoLegalAction, "no legal parser action");
  const auto arbitrary = [&] { return legal[keyed_choice(key_, state.payload, legal.size())]; };
  if (quality_ == ReferenceQuality::Bad) return arbitrary();
  const auto costs = action_costs(state, legal);
  if (quality_ == ReferenceQuality::Suboptimal) {
    if (std::count(costs.begin(), costs.end(), 0) == 1) {
      return legal[static_cast<std::size_t>(std::find(costs.begin(), costs.end(), 0) - costs.begin())];
    }
    return arbitrary();
  }
  return legal[static_cast<std::size_t>(std::min_element(costs.begin(), costs.end()) - costs.begin())];
}

}  // namespace l2s
