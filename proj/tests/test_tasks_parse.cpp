#include <doctest.h>

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "l2s/error.hpp"
#include "l2s/tasks/data.hpp"
#include "l2s/tasks/parse.hpp"

using namespace l2s;

namespace {

std::vector<std::vector<int>> all_head_vectors(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> h(static_cast<std::size_t>(n), 0);
  std::function<void(int)> rec = [&](int i) {
    if (i == n) {
      out.push_back(h);
      return;
    }
    for (int v = 0; v <= n; ++v) {
      h[static_cast<std::size_t>(i)] = v;
      rec(i + 1);
    }
  };
  rec(0);
  return out;
}

ParseTask make_task(const std::vector<int>& heads, ReferenceQuality q = ReferenceQuality::Optimal,
                    std::uint64_t seed = 0) {
  std::vector<std::string> words, tags;
  for (std::size_t i = 0; i < heads.size(); ++i) {
    words.push_back("w" + std::to_string(i));
    tags.push_back(i % 2 ? "N" : "V");
  }
  return ParseTask(1, words, tags, heads, 8, q, seed);
}

// Minimum terminal loss reachable from a state, by exhaustive search.
double min_reachable(const ParseTask& task, const StateRef& s, std::map<std::vector<int>, double>& memo) {
  if (s.depth == task.horizon()) return task.terminal_loss(s);
  auto key = s.payload;
  key.push_back(s.depth);
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  std::vector<int> legal;
  task.legal_actions(s, legal);
  REQUIRE_FALSE(legal.empty());
  double best = 1e9;
  for (int a : legal) best = std::min(best, min_reachable(task, transition(task, s, a), memo));
  memo[key] = best;
  return best;
}

template <typename F>
void for_each_state(const ParseTask& task, const StateRef& s, F&& f) {
  if (s.depth == task.horizon()) return;
  f(s);
  std::vector<int> legal;
  task.legal_actions(s, legal);
  for (int a : legal) for_each_state(task, transition(task, s, a), f);
}

}  // namespace

TEST_CASE("every action sequence ends in a complete tree after 2n - 1 steps") {
  for (int n = 1; n <= 4; ++n) {
    const auto task = make_task(std::vector<int>(static_cast<std::size_t>(n), 0));
    CHECK(task.horizon() == 2 * n - 1);
    std::size_t terminals = 0;
    std::function<void(const StateRef&)> walk = [&](const StateRef& s) {
      if (s.depth == task.horizon()) {
        const auto heads = task.heads_of(s);
        CHECK(std::none_of(heads.begin(), heads.end(), [](int h) { return h < 0; }));
        CHECK(is_projective_tree(heads));
        ++terminals;
        return;
      }
      std::vector<int> legal;
      task.legal_actions(s, legal);
      REQUIRE_FALSE(legal.empty());
      for (int a : legal) walk(transition(task, s, a));
    };
    walk(task.start());
    CHECK(terminals > 0);
  }
}

TEST_CASE("the system reaches exactly the projective trees") {
  for (int n = 1; n <= 4; ++n) {
    const auto task = make_task(std::vector<int>(static_cast<std::size_t>(n), 0));
    std::set<std::vector<int>> reached;
    std::function<void(const StateRef&)> walk = [&](const StateRef& s) {
      if (s.depth == task.horizon()) {
        reached.insert(task.heads_of(s));
        return;
      }
      std::vector<int> legal;
      task.legal_actions(s, legal);
      for (int a : legal) walk(transition(task, s, a));
    };
    walk(task.start());
    std::set<std::vector<int>> projective;
    for (const auto& h : all_head_vectors(n)) {
      if (is_projective_tree(h)) projective.insert(h);
    }
    CHECK(reached == projective);
  }
}

TEST_CASE("dynamic-oracle costs equal exhaustive loss differences") {
  for (int n = 1; n <= 4; ++n) {
    for (const auto& gold : all_head_vectors(n)) {
      if (!is_projective_tree(gold)) continue;
      const auto task = make_task(gold);
      std::map<std::vector<int>, double> memo;
      for_each_state(task, task.start(), [&](const StateRef& s) {
        std::vector<int> legal;
        task.legal_actions(s, legal);
        const auto costs = task.action_costs(s, legal);
        const double here = min_reachable(task, s, memo);
        for (std::size_t i = 0; i < legal.size(); ++i) {
          const double after = min_reachable(task, transition(task, s, legal[i]), memo);
          CHECK(costs[i] == doctest::Approx((after - here) * n));
        }
      });
    }
  }
}

TEST_CASE("the optimal reference reaches the best loss from every state") {
  for (int n = 1; n <= 4; ++n) {
    for (const auto& gold : all_head_vectors(n)) {
      if (!is_projective_tree(gold)) continue;
      const auto task = make_task(gold);
      std::map<std::vector<int>, double> memo;
      const ReferencePolicy ref;
      for_each_state(task, task.start(), [&](const StateRef& s) {
        CHECK(end_loss(task, run_to_end(task, ref, s)) == doctest::Approx(min_reachable(task, s, memo)));
      });
      CHECK(end_loss(task, run_to_end(task, ref, task.start())) == 0.0);
    }
  }
}

TEST_CASE("suboptimal reference follows the unique zero-cost action") {
  const std::vector<int> gold{2, 0, 2, 3};
  const auto task = make_task(gold, ReferenceQuality::Suboptimal, 4);
  for_each_state(task, task.start(), [&](const StateRef& s) {
    std::vector<int> legal;
    task.legal_actions(s, legal);
    const auto costs = task.action_costs(s, legal);
    if (std::count(costs.begin(), costs.end(), 0) == 1) {
      const auto zero = std::find(costs.begin(), costs.end(), 0) - costs.begin();
      CHECK(task.reference_action(s, legal) == legal[static_cast<std::size_t>(zero)]);
    } else {
      const int a = task.reference_action(s, legal);
      CHECK(std::find(legal.begin(), legal.end(), a) != legal.end());
    }
  });
}

TEST_CASE("bad reference is legal, seeded and label-free") {
  std::vector<std::string> words{"a", "b", "c"}, tags{"X", "Y", "Z"};
  const ParseTask unlabelled(3, words, tags, std::nullopt, 8, ReferenceQuality::Bad, 11);
  const ParseTask labelled(3, words, tags, std::vector<int>{2, 0, 2}, 8, ReferenceQuality::Bad, 11);
  const ReferencePolicy ref;
  const auto e1 = run_to_end(unlabelled, ref, unlabelled.start());
  const auto e2 = run_to_end(labelled, ref, labelled.start());
  CHECK(e1 == e2);
  CHECK_THROWS_AS(unlabelled.terminal_loss(e1), Error);
  const ParseTask optimal(3, words, tags, std::nullopt, 8, ReferenceQuality::Optimal, 11);
  std::vector<int> legal;
  optimal.legal_actions(optimal.start(), legal);
  CHECK_THROWS_AS(optimal.reference_action(optimal.start(), legal), Error);
}

TEST_CASE("uas loss and illegal transitions") {
  const auto task = make_task({2, 0});
  // n = 2: stack [0, 1], buffer at 2. LEFT attaches 1 <- 2, SHIFT, then RIGHT 2 -> root.
  StateRef s = task.start();
  s = transition(task, s, ParseTask::kLeft);
  s = transition(task, s, ParseTask::kShift);
  s = transition(task, s, ParseTask::kRight);
  CHECK(task.terminal_loss(s) == 0.0);
  CHECK(task.correct_heads(s) == 2);
  StateRef t = task.start();
  // Root attachment is illegal while the buffer still has tokens.
  CHECK_THROWS_AS(task.advance(t, ParseTask::kRight), Error);
  t = transition(task, t, ParseTask::kShift);
  t = transition(task, t, ParseTask::kRight);
  t = transition(task, t, ParseTask::kRight);
  CHECK(task.terminal_loss(t) == 1.0);
}

TEST_CASE("features have the declared dimension") {
  const auto task = make_task({2, 0, 2});
  const ReferencePolicy ref;
  StateRef s = task.start();
  while (s.depth < task.horizon()) {
    std::vector<int> legal;
    task.legal_actions(s, legal);
    std::vector<SparseFeatures> f;
    task.action_features(s, legal, f);
    REQUIRE(f.size() == legal.size());
    for (const auto& x : f) {
      CHECK(x.dim() == task.feature_dim());
      CHECK_FALSE(x.empty());
    }
    s = transition(task, s, legal[ref.choose(task, s, legal)]);
  }
}

TEST_CASE("gold heads are validated") {
  std::vector<std::string> w{"a", "b"}, t{"X", "Y"};
  CHECK_THROWS_AS(ParseTask(1, w, t, std::vector<int>{3, 0}), Error);
  CHECK_THROWS_AS(ParseTask(1, w, {"X"}, std::nullopt), Error);
}
