#include <doctest.h>

#include <cmath>
#include <vector>

#include "l2s/bandit.hpp"
#include "l2s/error.hpp"
#include "l2s/theory/exact_model.hpp"

using namespace l2s;

namespace {

LossOracle model_loss(const ExactModel& m, double scale = 1.0) {
  return [&m, scale](const StateRef& e) { return m.terminal_loss(e) / scale; };
}

BanditConfig config(double epsilon, double beta, std::uint64_t seed = 1) {
  BanditConfig c;
  c.epsilon = epsilon;
  c.beta = beta;
  c.seed = seed;
  return c;
}

// Direct enumeration of E[c_hat(a)] for a deterministic latest policy:
// the roll-in path is a single trajectory, so the expectation is an average
// over t of the mixed roll-out value after taking `label` at s_t.
double enumerate_expected_cost(const ExactModel& m, const LinearPolicy& latest, double beta, const std::string& label) {
  const ReferencePolicy ref;
  double total = 0.0;
  StateRef s = m.start();
  for (int t = 0; t < m.horizon(); ++t) {
    const auto legal = checked_legal_actions(m, s);
    const auto& st = m.state(ExactModel::state_of(s));
    for (std::size_t i = 0; i < legal.size(); ++i) {
      if (st.actions[static_cast<std::size_t>(legal[i])].label != label) continue;
      const StateRef next = transition(m, s, legal[i]);
      const double q_ref = end_loss(m, run_to_end(m, ref, next));
      const double q_latest = end_loss(m, run_to_end(m, latest, next));
      total += beta * q_ref + (1.0 - beta) * q_latest;
    }
    s = transition(m, s, legal[latest.choose(m, s, legal)]);
  }
  return total / m.horizon();
}

}  // namespace

TEST_CASE("importance-weighted costs") {
  CHECK(importance_weighted_costs(3, 1, 0.4) == std::vector<double>{0.0, 1.2000000000000002, 0.0});
  CHECK(importance_weighted_costs(1, 0, 0.5) == std::vector<double>{0.5});
  CHECK_THROWS(importance_weighted_costs(2, 2, 0.5));
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(BanditState(3, config(1.5, 0.5)), Error);
  CHECK_THROWS_AS(BanditState(3, config(0.1, -0.1)), Error);
}

TEST_CASE("epsilon zero never updates") {
  const auto m = fig3a_model();
  BanditState state(m.feature_dim(), config(0.0, 0.5));
  for (int i = 0; i < 200; ++i) {
    const auto out = bandit_step(state, m, model_loss(m, 100.0));
    CHECK(out.mode == BanditMode::Exploited);
    CHECK(out.policy_index == 0);
  }
  CHECK(state.n_explore() == 0);
  CHECK(state.learner().regressor().update_count() == 0);
  CHECK(state.pool().size() == 1);
}

TEST_CASE("epsilon one explores every round with one update each") {
  const auto m = fig3a_model();
  BanditState state(m.feature_dim(), config(1.0, 0.5));
  for (int i = 0; i < 50; ++i) {
    const auto out = bandit_step(state, m, model_loss(m, 100.0));
    REQUIRE(out.mode == BanditMode::Explored);
    REQUIRE(out.exploration.has_value());
    const auto& rec = *out.exploration;
    CHECK(rec.t >= 0);
    CHECK(rec.t < m.horizon());
    CHECK(rec.cost_estimate.size() == rec.k);
    double nonzero = 0;
    for (double c : rec.cost_estimate) nonzero += c != 0.0;
    CHECK(nonzero <= 1);
    CHECK(rec.cost_estimate[rec.action_index] == doctest::Approx(rec.k * out.observed_loss));
  }
  CHECK(state.n_explore() == 50);
  CHECK(state.learner().regressor().update_count() == 50);
  CHECK(state.pool().size() == 51);
}

TEST_CASE("exploration count is binomial") {
  const auto m = fig3a_model();
  BanditState state(m.feature_dim(), config(0.1, 0.5, 17));
  for (int i = 0; i < 10000; ++i) bandit_step(state, m, model_loss(m, 100.0));
  // 3 sd of Binomial(10^4, 0.1) is 90.
  CHECK(state.n_explore() >= 910);
  CHECK(state.n_explore() <= 1090);
}

TEST_CASE("losses outside [0, 1] are rejected") {
  const auto m = fig3a_model();
  BanditState state(m.feature_dim(), config(1.0, 1.0));
  // With beta = 1 and d -> 10 reachable, some round sees loss > 1.
  bool threw = false;
  for (int i = 0; i < 200 && !threw; ++i) {
    try {
      bandit_step(state, m, model_loss(m));
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::LossOutOfRange);
      threw = true;
    }
  }
  CHECK(threw);
  BanditState s2(m.feature_dim(), config(0.0, 1.0));
  CHECK_THROWS_AS(bandit_step(s2, m, [](const StateRef&) { return -0.1; }), Error);
  CHECK_THROWS_AS(bandit_step(s2, m, [](const StateRef&) { return NAN; }), Error);
}

TEST_CASE("bandit runs are reproducible") {
  const auto m = fig3c_model(0.1);
  auto run = [&] {
    BanditState state(m.feature_dim(), config(0.3, 0.5, 9));
    std::vector<nlohmann::json> log;
    for (std::size_t i = 0; i < 100; ++i) log.push_back(to_json(bandit_step(state, m, model_loss(m, 1.1)), i));
    return log;
  };
  CHECK(run() == run());
}

TEST_CASE("probe exact side agrees with a direct enumeration") {
  const auto m = fig3c_model(0.1);
  for (double beta : {0.0, 0.5, 1.0}) {
    BanditState state(m.feature_dim(), config(1.0, beta, 3));
    for (int i = 0; i < 10; ++i) bandit_step(state, m, model_loss(m, 1.1));
    for (const char* label : {"a", "b", "c", "d"}) {
      const auto p = unbiasedness_probe(m, state, label, 20000);
      CHECK(p.exact == doctest::Approx(enumerate_expected_cost(m, state.latest_policy(), beta, label)).epsilon(1e-12));
      CHECK(p.z() <= 4.0);
    }
  }
}

TEST_CASE("probe with a fresh policy on the third fixture") {
  // Zero weights pick the lowest index: a at s1 then c at s2.
  const auto m = fig3c_model(0.1);
  BanditState state(m.feature_dim(), config(1.0, 1.0, 5));
  const auto pa = unbiasedness_probe(m, state, "a", 50000);
  // t = 0 contributes Q^ref(s1, a) = 1; t = 1 has no action labelled a.
  CHECK(pa.exact == doctest::Approx(0.5));
  CHECK(pa.z() <= 4.0);
  const auto pd = unbiasedness_probe(m, state, "d", 50000);
  // t = 1 at s2: d leads to loss 1 - eps.
  CHECK(pd.exact == doctest::Approx(0.45));
}

TEST_CASE("theoretical exploration rate") {
  const double e = theoretical_epsilon(2, 3, 1000, std::log(8.0));
  CHECK(e == doctest::Approx(std::pow(6.0, 2.0 / 3.0) * std::cbrt(std::log(8000.0) / 1000.0)));
}
