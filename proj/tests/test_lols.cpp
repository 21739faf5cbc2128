#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <vector>

#include "l2s/error.hpp"
#include "l2s/lols.hpp"
#include "l2s/rng.hpp"
#include "l2s/theory/exact_model.hpp"

using namespace l2s;

namespace {

RolloutPlan make_plan(RollIn in, RollOut out, double beta = 0.5,
                      DrawGranularity g = DrawGranularity::PerRollout) {
  RolloutPlan p;
  p.roll_in = in;
  p.roll_out = out;
  p.beta = beta;
  p.granularity = g;
  return p;
}

std::string name_at(const ExactModel& m, const StateRef& s) { return m.state(ExactModel::state_of(s)).name; }

}  // namespace

TEST_CASE("extract_costs subtracts the minimum") {
  const std::vector<double> losses{3.0, 1.5, 2.0};
  const auto c = extract_costs(losses);
  CHECK(c == std::vector<double>{1.5, 0.0, 0.5});
  CHECK_THROWS_AS(extract_costs(std::vector<double>{}), Error);
  CHECK_THROWS_AS(extract_costs(std::vector<double>{1.0, NAN}), Error);
}

TEST_CASE("strategy names parse and print") {
  CHECK(parse_roll_in("learned") == RollIn::Learned);
  CHECK(parse_roll_out("mixture") == RollOut::Mixture);
  CHECK(parse_granularity("per-example") == DrawGranularity::PerExample);
  CHECK(to_string(DrawGranularity::PerState) == "per-state");
  CHECK_THROWS_AS(parse_roll_out("sideways"), Error);
}

TEST_CASE("reference roll-in and roll-out on the first fixture") {
  const auto m = fig3a_model();
  auto state = TrainState::create(m.feature_dim(), {}, 1);
  const auto out = process_example(state, m, make_plan(RollIn::Reference, RollOut::Reference));
  REQUIRE(out.diagnostics.decisions.size() == 2);
  CHECK(name_at(m, out.diagnostics.decisions[0].state) == "s1");
  CHECK(name_at(m, out.diagnostics.decisions[1].state) == "s2");
  // From s1 both actions reach a zero-loss end under the reference.
  CHECK(out.diagnostics.decisions[0].costs == std::vector<double>{0.0, 0.0});
  CHECK(out.diagnostics.decisions[1].costs == std::vector<double>{0.0, 10.0});
  CHECK(state.examples_seen == 1);
  CHECK(state.history.size() == 2);
}

TEST_CASE("examples are fed to the learner in t-order after the instance") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = random_model(rng, 4, 3);
    auto state = TrainState::create(m.feature_dim(), {}, 7);
    for (int round = 0; round < 3; ++round) {
      CsoaaLearner copy = state.learner;
      const LinearPolicy before = state.learner.policy();
      const auto out = process_example(state, m, make_plan(RollIn::Learned, RollOut::Mixture));
      // Roll-in used the policy from the start of the instance.
      for (std::size_t t = 0; t < out.diagnostics.decisions.size(); ++t) {
        const auto& d = out.diagnostics.decisions[t];
        CHECK(d.roll_in_action == d.actions[before.choose(m, d.state, d.actions)]);
      }
      for (const auto& ex : out.examples) copy.update(ex);
      REQUIRE(copy.regressor().weights().size() == state.learner.regressor().weights().size());
      for (std::size_t i = 0; i < copy.dim(); ++i) {
        CHECK(copy.regressor().weights()[i] == state.learner.regressor().weights()[i]);
      }
    }
  }
}

TEST_CASE("mixture with beta at the ends matches the pure roll-outs") {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = random_model(rng, 4, 3);
    for (auto g : {DrawGranularity::PerRollout, DrawGranularity::PerState, DrawGranularity::PerExample}) {
      auto a = TrainState::create(m.feature_dim(), {}, 2);
      auto b = TrainState::create(m.feature_dim(), {}, 2);
      auto c = TrainState::create(m.feature_dim(), {}, 2);
      auto d = TrainState::create(m.feature_dim(), {}, 2);
      for (int round = 0; round < 3; ++round) {
        const auto ref = process_example(a, m, make_plan(RollIn::Learned, RollOut::Reference));
        const auto mix1 = process_example(b, m, make_plan(RollIn::Learned, RollOut::Mixture, 1.0, g));
        const auto lrn = process_example(c, m, make_plan(RollIn::Learned, RollOut::Learned));
        const auto mix0 = process_example(d, m, make_plan(RollIn::Learned, RollOut::Mixture, 0.0, g));
        for (std::size_t t = 0; t < ref.diagnostics.decisions.size(); ++t) {
          CHECK(ref.diagnostics.decisions[t].rollout_losses == mix1.diagnostics.decisions[t].rollout_losses);
          CHECK(lrn.diagnostics.decisions[t].rollout_losses == mix0.diagnostics.decisions[t].rollout_losses);
        }
      }
    }
  }
}

TEST_CASE("draw granularity shapes the reference share") {
  Rng rng(21);
  const auto m = random_model(rng, 5, 3);
  std::map<std::string, std::vector<double>> shares;
  for (auto g : {DrawGranularity::PerRollout, DrawGranularity::PerState, DrawGranularity::PerExample}) {
    auto state = TrainState::create(m.feature_dim(), {}, 4);
    for (int round = 0; round < 40; ++round) {
      const auto out = process_example(state, m, make_plan(RollIn::Learned, RollOut::Mixture, 0.5, g));
      std::vector<double> in_example;
      for (const auto& d : out.diagnostics.decisions) {
        for (double s : d.reference_share) {
          in_example.push_back(s);
          shares[to_string(g)].push_back(s);
        }
      }
      if (g == DrawGranularity::PerExample && !in_example.empty()) {
        // Terminal deviations report the fixed choice too.
        CHECK(std::all_of(in_example.begin(), in_example.end(), [&](double s) { return s == in_example.front(); }));
      }
    }
  }
  for (double s : shares["per-rollout"]) CHECK((s == 0.0 || s == 1.0));
  const auto& ps = shares["per-state"];
  CHECK(std::any_of(ps.begin(), ps.end(), [](double s) { return s > 0.0 && s < 1.0; }));
}

TEST_CASE("training is deterministic under a seed") {
  Rng rng(30);
  const auto m = random_model(rng, 5, 3);
  auto run = [&](std::uint64_t seed) {
    auto state = TrainState::create(m.feature_dim(), {}, seed);
    std::vector<nlohmann::json> log;
    for (int r = 0; r < 10; ++r) log.push_back(to_json(process_example(state, m, make_plan(RollIn::Learned, RollOut::Mixture)).diagnostics));
    return std::make_pair(log, std::vector<double>(state.learner.regressor().weights().begin(),
                                                   state.learner.regressor().weights().end()));
  };
  CHECK(run(5) == run(5));
}

TEST_CASE("process_example rejects unlabelled or mismatched tasks") {
  const auto m = fig3a_model();
  auto wrong = TrainState::create(m.feature_dim() + 1, {}, 1);
  CHECK_THROWS_AS(process_example(wrong, m, {}), Error);
}

TEST_CASE("policy history rebuilds every snapshot exactly") {
  Rng rng(77);
  for (std::size_t d : {1u, 5u, 40u}) {
    PolicyHistory h(std::vector<double>(d, 0.0), TieBreak::LowestIndex);
    std::vector<std::vector<double>> dense{std::vector<double>(d, 0.0)};
    std::vector<double> w(d, 0.0);
    for (int n = 0; n < 120; ++n) {
      std::vector<std::uint32_t> touched;
      const std::size_t k = rng.index(d + 1);
      for (std::size_t j = 0; j < k; ++j) {
        const auto i = static_cast<std::uint32_t>(rng.index(d));
        w[i] += rng.uniform() - 0.5;
        touched.push_back(i);
      }
      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
      h.append(w, touched);
      dense.push_back(w);
    }
    REQUIRE(h.size() == dense.size());
    for (std::size_t n = 0; n < dense.size(); ++n) {
      const auto p = h.snapshot(n);
      CHECK(std::equal(p.weights().begin(), p.weights().end(), dense[n].begin()));
    }
    std::vector<std::size_t> idx;
    for (int j = 0; j < 30; ++j) idx.push_back(rng.index(dense.size()));
    const auto many = h.snapshots(idx);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      CHECK(std::equal(many[j].weights().begin(), many[j].weights().end(), dense[idx[j]].begin()));
    }

    const auto path = std::filesystem::temp_directory_path() / ("l2s_history_" + std::to_string(d) + ".bin");
    h.save(path);
    const auto back = PolicyHistory::load(path);
    std::filesystem::remove(path);
    REQUIRE(back.size() == h.size());
    for (std::size_t n = 0; n < dense.size(); n += 7) {
      const auto p = back.snapshot(n);
      CHECK(std::equal(p.weights().begin(), p.weights().end(), dense[n].begin()));
    }
    CHECK_THROWS_AS(h.snapshot(dense.size()), Error);
  }
}

TEST_CASE("history tracks the learner after each instance") {
  Rng rng(8);
  const auto m = random_model(rng, 4, 3);
  auto state = TrainState::create(m.feature_dim(), {}, 3);
  std::vector<LinearPolicy> seen{state.learner.policy()};
  for (int r = 0; r < 15; ++r) {
    process_example(state, m, make_plan(RollIn::Learned, RollOut::Mixture));
    seen.push_back(state.learner.policy());
  }
  for (std::size_t n = 0; n < seen.size(); ++n) CHECK(state.history.snapshot(n) == seen[n]);
}

TEST_CASE("averaged policy draws uniformly over trained policies") {
  const auto m = fig3a_model();
  auto state = TrainState::create(m.feature_dim(), {}, 1);
  CHECK_THROWS_AS(averaged_policy(state), Error);
  for (int r = 0; r < 4; ++r) process_example(state, m, make_plan(RollIn::Learned, RollOut::Mixture));
  const auto avg = averaged_policy(state);
  CHECK(avg.first() == 1);
  CHECK(avg.last() == 4);
  CHECK(avg.pool_size() == 4);
  const auto with0 = averaged_policy(state, true);
  CHECK(with0.pool_size() == 5);
  Rng rng(2);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 40000; ++i) ++counts[avg.draw(rng)];
  CHECK(counts[0] == 0);
  for (int k = 1; k <= 4; ++k) CHECK(std::abs(counts[k] - 10000) < 400);
}
