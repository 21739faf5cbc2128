#include "l2s/tasks/label_tree.hpp"

#include <algorithm>
#include <cmath>

#include "l2s/rng.hpp"

namespace l2s {

namespace {

int midpoint(int lo, int hi) { return lo + (hi - lo + 1) / 2; }

SparseFeatures unit_norm(SparseFeatures x) {
  const double norm = std::sqrt(x.squared_norm());
  if (norm == 0.0) return x;
  std::vector<FeatureEntry> entries(x.entries().begin(), x.entries().end());
  for (auto& e : entries) e.value /= norm;
  return SparseFeatures(x.dim(), std::move(entries));
}

}  // namespace

int LabelTreeTask::horizon_for(std::size_t classes) {
  int t = 0;
  while ((std::size_t{1} << t) < classes) ++t;
  return t;
}

std::size_t LabelTreeTask::dim_for(std::size_t classes, std::size_t input_dim) {
  const std::size_t nodes = (std::size_t{1} << horizon_for(classes)) - 1;
  return nodes * 2 * input_dim + 1;
}

LabelTreeTask::LabelTreeTask(std::uint64_t id, SparseFeatures input, std::optional<std::vector<double>> costs,
                             std::size_t classes, ReferenceQuality quality, std::uint64_t reference_seed)
    : id_(id),
      input_(unit_norm(std::move(input))),
      costs_(std::move(costs)),
      classes_(classes),
      quality_(quality),
      key_(reference_key(reference_seed, id)),
      horizon_(horizon_for(classes)),
      dim_(dim_for(classes, input_.dim())) {
  if (classes_ < 2) throw Error(ErrorCode::BadConfig, "label tree needs at least two classes");
  if (costs_) {
    if (costs_->size() != classes_) throw Error(ErrorCode::ParseError, "cost vector length differs from class count");
    for (double c : *costs_) {
      if (!std::isfinite(c) || c < 0.0) throw Error(ErrorCode::ParseError, "costs must be finite and non-negative");
    }
  }
}

StateRef LabelTreeTask::start() const { return StateRef{id_, 0, {0, 0, static_cast<int>(classes_)}}; }

void LabelTreeTask::legal_actions(const StateRef& state, std::vector<int>& out) const {
  const auto [lo, hi] = range_of(state);
  if (hi - lo > 1) {
    out.assign({kLeft, kRight});
  } else {
    out.assign({kStay});
  }
}

void LabelTreeTask::advance(StateRef& state, int action) const {
  if (state.depth >= horizon_) throw Error(ErrorCode::HorizonExceeded, "label tree walk already finished");
  auto& p = state.payload;
  const int lo = p[1], hi = p[2];
  if (hi - lo > 1) {
    const int mid = midpoint(lo, hi);
    if (action == kLeft) {
      p = {2 * p[0] + 1, lo, mid};
    } else if (action == kRight) {
      p = {2 * p[0] + 2, mid, hi};
    } else {
      throw Error(ErrorCode::IllegalAction, "stay at an internal node");
    }
  } else if (action != kStay) {
    throw Error(ErrorCode::IllegalAction, "branching at a leaf");
  }
  ++state.depth;
}

void LabelTreeTask::action_features(const StateRef& state, std::span<const int> actions,
                                    std::vector<SparseFeatures>& out) const {
  out.resize(actions.size());
  const int node = state.payload[0];
  for (std::size_t k = 0; k < actions.size(); ++k) {
    if (actions[k] == kStay) {
      out[k] = SparseFeatures::unit(dim_, static_cast<std::uint32_t>(dim_ - 1));
    } else {
      const auto block = static_cast<std::uint32_t>((2 * node + actions[k]) * static_cast<int>(input_.dim()));
      out[k] = input_.shifted(block, dim_);
    }
  }
}

double LabelTreeTask::terminal_loss(const StateRef& terminal) const {
  if (!costs_) throw Error(ErrorCode::MissingGold, "label tree loss needs the cost vector");
  return (*costs_)[static_cast<std::size_t>(label_of(terminal))];
}

int LabelTreeTask::optimal_action(const StateRef& state) const {
  if (!costs_) throw Error(ErrorCode::MissingGold, "reference needs the cost vector");
  const auto [lo, hi] = range_of(state);
  const int mid = midpoint(lo, hi);
  const auto& c = *costs_;
  const double left = *std::min_element(c.begin() + lo, c.begin() + mid);
  const double right = *std::min_element(c.begin() + mid, c.begin() + hi);
  return left <= right ? kLeft : kRight;
}

int LabelTreeTask::reference_action(const StateRef& state, std::span<const int> legal) const {
  const auto [lo, hi] = range_of(state);
  if (hi - lo <= 1) return kStay;
  const auto arbitrary = [&] { return legal[keyed_choice(key_, state.payload, legal.size())]; };
  switch (quality_) {
    case ReferenceQuality::Bad: return arbitrary();
    case ReferenceQuality::Suboptimal:
      if (state.depth % 2 == 1) return arbitrary();
      return optimal_action(state);
    case ReferenceQuality::Optimal: return optimal_action(state);
  }
  return kLeft;
}

}  // namespace l2s
