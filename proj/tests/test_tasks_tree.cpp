#include <doctest.h>

#include <algorithm>
#include <functional>
#include <set>
#include <vector>

#include "l2s/error.hpp"
#include "l2s/rng.hpp"
#include "l2s/tasks/label_tree.hpp"

using namespace l2s;

namespace {

SparseFeatures input(std::size_t d) {
  std::vector<FeatureEntry> e;
  for (std::size_t i = 0; i < d; ++i) e.push_back({static_cast<std::uint32_t>(i), 1.0 + static_cast<double>(i)});
  return SparseFeatures(d, e);
}

std::vector<double> random_costs(Rng& rng, std::size_t k) {
  std::vector<double> c(k);
  for (auto& v : c) v = static_cast<double>(rng.index(4));
  return c;
}

void for_each_state(const LabelTreeTask& task, const StateRef& s, const std::function<void(const StateRef&)>& f) {
  f(s);
  if (s.depth == task.horizon()) return;
  std::vector<int> legal;
  task.legal_actions(s, legal);
  for (int a : legal) for_each_state(task, transition(task, s, a), f);
}

}  // namespace

TEST_CASE("horizon and dimension") {
  CHECK(LabelTreeTask::horizon_for(2) == 1);
  CHECK(LabelTreeTask::horizon_for(5) == 3);
  CHECK(LabelTreeTask::horizon_for(8) == 3);
  CHECK(LabelTreeTask::horizon_for(9) == 4);
  CHECK(LabelTreeTask::dim_for(4, 3) == 3 * 2 * 3 + 1);
}

TEST_CASE("every label is reached by exactly one path") {
  for (std::size_t k = 2; k <= 11; ++k) {
    LabelTreeTask task(0, input(3), std::vector<double>(k, 0.0), k);
    std::vector<int> labels;
    for_each_state(task, task.start(), [&](const StateRef& s) {
      if (s.depth == task.horizon()) labels.push_back(LabelTreeTask::label_of(s));
    });
    std::sort(labels.begin(), labels.end());
    std::vector<int> expected(k);
    for (std::size_t i = 0; i < k; ++i) expected[i] = static_cast<int>(i);
    CHECK(labels == expected);
  }
}

TEST_CASE("optimal reference reaches the cheapest label below every node") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + rng.index(10);
    const auto costs = random_costs(rng, k);
    LabelTreeTask task(static_cast<std::uint64_t>(trial), input(2), costs, k);
    const ReferencePolicy ref;
    for_each_state(task, task.start(), [&](const StateRef& s) {
      const auto [lo, hi] = LabelTreeTask::range_of(s);
      const double best = *std::min_element(costs.begin() + lo, costs.begin() + hi);
      CHECK(end_loss(task, run_to_end(task, ref, s)) == best);
    });
  }
}

TEST_CASE("optimal reference breaks ties to the left") {
  LabelTreeTask task(0, input(2), std::vector<double>{1, 0, 1, 0}, 4);
  const ReferencePolicy ref;
  CHECK(LabelTreeTask::label_of(run_to_end(task, ref, task.start())) == 1);
}

TEST_CASE("bad reference is arbitrary but seeded") {
  std::set<int> reached;
  for (std::uint64_t id = 0; id < 64; ++id) {
    LabelTreeTask a(id, input(2), std::nullopt, 8, ReferenceQuality::Bad, 3);
    LabelTreeTask b(id, input(2), std::nullopt, 8, ReferenceQuality::Bad, 3);
    const ReferencePolicy ref;
    const int la = LabelTreeTask::label_of(run_to_end(a, ref, a.start()));
    CHECK(la == LabelTreeTask::label_of(run_to_end(b, ref, b.start())));
    reached.insert(la);
  }
  CHECK(reached.size() >= 6);
}

TEST_CASE("features live in per-node, per-action blocks") {
  const std::size_t d = 3;
  LabelTreeTask task(0, input(d), std::vector<double>(5, 1.0), 5);
  for_each_state(task, task.start(), [&](const StateRef& s) {
    if (s.depth == task.horizon()) return;
    std::vector<int> legal;
    task.legal_actions(s, legal);
    std::vector<SparseFeatures> f;
    task.action_features(s, legal, f);
    for (std::size_t i = 0; i < legal.size(); ++i) {
      CHECK(f[i].dim() == task.feature_dim());
      if (legal[i] == LabelTreeTask::kStay) {
        CHECK(f[i].entries().front().index == task.feature_dim() - 1);
      } else {
        const auto block = static_cast<std::uint32_t>((2 * s.payload[0] + legal[i]) * static_cast<int>(d));
        CHECK(f[i].entries().front().index == block);
        CHECK(f[i].squared_norm() == doctest::Approx(1.0));
      }
    }
  });
}

TEST_CASE("label tree validation") {
  CHECK_THROWS_AS(LabelTreeTask(0, input(2), std::vector<double>{0.0}, 1), Error);
  CHECK_THROWS_AS(LabelTreeTask(0, input(2), std::vector<double>{0.0, 1.0}, 3), Error);
  CHECK_THROWS_AS(LabelTreeTask(0, input(2), std::vector<double>{0.0, -1.0}, 2), Error);
  LabelTreeTask ok(0, input(2), std::vector<double>{0.0, 1.0, 0.0}, 3);
  StateRef s = ok.start();
  CHECK_THROWS_AS(ok.advance(s, LabelTreeTask::kStay), Error);
}
