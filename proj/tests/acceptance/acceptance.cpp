// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "l2s/bandit.hpp"
#include "l2s/cslearn.hpp"
#include "l2s/experiment.hpp"
#include "l2s/tasks/data.hpp"
#include "l2s/theory/checks.hpp"
#include "l2s/theory/snake.hpp"

using namespace l2s;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double limit_seconds, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < limit_seconds;
  const bool pass = out.ok && in_time;
  if (!pass) ++failures;
  std::printf("%s  [%d] %s: %s; %.2fs (limit %.0fs)%s\n", pass ? "PASS" : "FAIL", id, name, out.detail.c_str(), secs,
              limit_seconds, in_time ? "" : " TIMEOUT");
  std::fflush(stdout);
}

std::string fmt(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

// Longest induced path from vertex 0 by unpruned depth-first search.
std::size_t brute_force_snake_edges(int dims) {
  std::vector<std::uint32_t> path{0};
  std::size_t best = 0;
  std::function<void()> rec = [&] {
    best = std::max(best, path.size() - 1);
    for (int b = 0; b < dims; ++b) {
      const std::uint32_t w = path.back() ^ (1u << b);
      bool ok = true;
      for (std::size_t i = 0; i + 1 < path.size() && ok; ++i) ok = std::popcount(path[i] ^ w) > 1;
      if (!ok) continue;
      path.push_back(w);
      rec();
      path.pop_back();
    }
  };
  rec();
  return best;
}

ExactPolicy random_policy(const ExactModel& m, Rng& rng, bool deterministic) {
  ExactPolicy p;
  p.probs.resize(m.state_count());
  for (std::size_t s = 0; s < m.state_count(); ++s) {
    auto& row = p.probs[s];
    row.assign(m.state(static_cast<int>(s)).actions.size(), 0.0);
    if (row.empty()) continue;
    if (deterministic) {
      row[rng.index(row.size())] = 1.0;
      continue;
    }
    double total = 0.0;
    for (auto& x : row) total += (x = rng.uniform() + 1e-3);
    for (auto& x : row) x /= total;
  }
  return p;
}

// Signed improvement of `v` over `ref` under the metric direction.
double better_by(const MetricInfo& m, double v, double ref) { return m.higher_is_better ? v - ref : ref - v; }

std::string cells_text(const GridReport& g) {
  std::string s;
  const char* names[2][3] = {{"RR", "RM", "RL"}, {"LR", "LM", "LL"}};
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 3; ++c) s += std::string(s.empty() ? "" : " ") + names[r][c] + "=" + fmt(g.cells[r][c], 4);
  }
  return s;
}

}  // namespace

int main() {
  const auto dir = std::filesystem::temp_directory_path() / "l2s_acceptance";
  std::filesystem::create_directories(dir);

  criterion(1, "reference roll-in and roll-out fails on the first fixture", 1.0, [] {
    const auto rec = counterexample_theorem1();
    const double gap = rec.adversarial_j - rec.j_reference;
    return Outcome{rec.s3_absent && gap == 100.0,
                   "s3 absent=" + std::string(rec.s3_absent ? "yes" : "no") + ", J - Jref=" + fmt(gap)};
  });

  criterion(2, "reference roll-out is stuck, mixture roll-out escapes", 5.0, [] {
    const auto rec = counterexample_theorem2(0.1, 500, 1);
    const bool stuck = std::abs(rec.reference_rollout_j - 0.9) <= 1e-9 && std::abs(rec.best_deviation_j) <= 1e-9;
    const bool escapes = rec.mixture_reached_zero_at > 0 && rec.mixture_reached_zero_at <= 500 &&
                         std::abs(rec.mixture_rollout_j) <= 1e-9;
    return Outcome{stuck && escapes, "J=" + fmt(rec.reference_rollout_j) + " vs deviation J=" +
                                         fmt(rec.best_deviation_j) + ", mixture J=0 at round " +
                                         std::to_string(rec.mixture_reached_zero_at)};
  });

  criterion(3, "regret bound on 50 random models x 5 beta", 120.0, [] {
    Rng rng = Rng(1).substream("acceptance-bound");
    std::size_t checks = 0, held = 0;
    double min_slack = INFINITY;
    for (std::size_t m = 0; m < 50; ++m) {
      const auto model = random_model(rng, 5, 3);
      for (double beta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        RolloutPlan plan;
        plan.roll_in = RollIn::Learned;
        plan.roll_out = RollOut::Mixture;
        plan.beta = beta;
        plan.seed = hash_combine(1, m);
        const auto run = run_lols(model, plan, 20);
        const auto r = check_theorem3(model, run.trace, beta);
        ++checks;
        const double rhs = model.horizon() * r.eps_bar;
        held += r.lhs() <= rhs + 1e-9;
        min_slack = std::min(min_slack, rhs - r.lhs());
      }
    }
    return Outcome{held == checks, std::to_string(held) + "/" + std::to_string(checks) +
                                       " hold, min slack " + fmt(min_slack)};
  });

  criterion(4, "performance-difference identity on 100 models x 10 pairs", 30.0, [] {
    Rng rng = Rng(1).substream("acceptance-identity");
    double worst = 0.0;
    std::size_t agree = 0;
    for (int m = 0; m < 100; ++m) {
      const auto model = random_model(rng, 5, 3);
      for (int k = 0; k < 10; ++k) {
        const auto p1 = random_policy(model, rng, k % 2 == 0);
        const auto p2 = random_policy(model, rng, k % 2 == 0);
        const double gap = check_lemma6(model, p1, p2).max_gap();
        worst = std::max(worst, gap);
        agree += gap <= 1e-9;
      }
    }
    return Outcome{agree == 1000, std::to_string(agree) + "/1000 pairs agree, max gap " + fmt(worst)};
  });

  criterion(5, "snake descent lower bound", 60.0, [] {
    const auto r3 = snake_lower_bound(3);
    bool ok = r3.updates == 4 && r3.traversal == std::vector<std::uint32_t>{0b000, 0b001, 0b011, 0b111, 0b110} &&
              r3.strictly_decreasing;
    std::string detail = "T=3: " + std::to_string(r3.updates) + " updates";
    for (int dims : {4, 5}) {
      const auto r = snake_lower_bound(dims);
      const auto oracle = brute_force_snake_edges(dims);
      ok = ok && r.updates == oracle && r.strictly_decreasing;
      detail += "; T=" + std::to_string(dims) + ": " + std::to_string(r.updates) + " updates, oracle " +
                std::to_string(oracle);
    }
    return Outcome{ok, detail};
  });

  criterion(6, "bandit cost estimates are unbiased", 60.0, [] {
    const auto model = fig3c_model(0.1);
    const double max_loss = 1.1;
    double worst = 0.0;
    for (double beta : {0.0, 0.5, 1.0}) {
      BanditConfig bc;
      bc.epsilon = 1.0;
      bc.beta = beta;
      bc.seed = 1;
      BanditState state(model.feature_dim(), bc);
      const LossOracle scaled = [&](const StateRef& e) { return model.terminal_loss(e) / max_loss; };
      for (int i = 0; i < 25; ++i) bandit_step(state, model, scaled);
      for (const char* label : {"a", "b", "c", "d"}) {
        worst = std::max(worst, unbiasedness_probe(model, state, label, 100000).z());
      }
    }
    return Outcome{worst <= 3.0, "12 probes x 1e5 trials, max |z| " + fmt(worst, 3)};
  });

  criterion(7, "roll-in / roll-out grids", 600.0, [&] {
    const auto mc = dir / "multiclass.csv";
    const auto seq = dir / "sequences.tsv";
    const auto trees = dir / "trees.tsv";
    write_multiclass_csv(mc, generate_multiclass(2000, 1));
    write_tsv(seq, generate_sequences(500, 1));
    write_tsv(trees, generate_trees(300, 1));

    bool ok = true;
    std::string detail;
    const std::pair<const char*, std::filesystem::path> tasks[] = {{"multiclass", mc}, {"sequence", seq}, {"parse", trees}};
    for (const auto& [task, path] : tasks) {
      ExperimentConfig c;
      c.task = task;
      c.data = path.string();

      c.reference = "bad";
      const auto bad = run_grid(c);
      const double rr = bad.cells[0][0];
      bool beats = true;
      for (int col = 0; col < 3; ++col) beats = beats && better_by(bad.metric, bad.cells[1][col], rr) > 0.0;
      ok = ok && beats;

      c.reference = "optimal";
      const auto good = run_grid(c);
      const auto [br, bc] = good.best();
      const double best = good.cells[br][bc];
      const double rel = -better_by(good.metric, good.cells[1][1], best) / std::abs(best);
      ok = ok && rel <= 0.02;
      detail += std::string(detail.empty() ? "" : " | ") + task + " bad{" + cells_text(bad) + "} learned beats RR=" +
                (beats ? "yes" : "no") + "; optimal{" + cells_text(good) + "} LM gap " + fmt(100 * rel, 3) + "%";

      if (std::string(task) == "sequence") {
        double lo = INFINITY, hi = -INFINITY;
        for (const auto& row : good.cells) {
          for (double v : row) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
          }
        }
        ok = ok && hi - lo <= 0.02;
        detail += ", band " + fmt(hi - lo, 3);
      }
    }
    return Outcome{ok, detail};
  });

  criterion(8, "learner gradient and reproducibility", 30.0, [&] {
    Rng rng(8);
    double worst = 0.0;
    for (int probe = 0; probe < 1000; ++probe) {
      const std::size_t d = 1 + rng.index(16);
      OnlineRegressor reg(d, {});
      std::vector<double> w(d);
      for (auto& v : w) v = rng.uniform() * 2 - 1;
      reg.mutable_weights() = w;
      std::vector<FeatureEntry> e;
      for (std::size_t i = 0; i < d; ++i) {
        if (rng.bernoulli(0.6)) e.push_back({static_cast<std::uint32_t>(i), rng.uniform() * 2 - 1});
      }
      if (e.empty()) e.push_back({0, 1.0});
      const SparseFeatures x(d, e);
      const double y = rng.uniform() * 2 - 1;
      const double eta = 0.01 + rng.uniform();
      auto loss = [&](const std::vector<double>& v) {
        const double r = x.dot(v) - y;
        return r * r;
      };
      reg.step(x, y, eta);
      double num = 0.0, den = 0.0;
      const double h = 1e-6;
      for (std::size_t i = 0; i < d; ++i) {
        auto plus = w, minus = w;
        plus[i] += h;
        minus[i] -= h;
        const double expected = -eta * (loss(plus) - loss(minus)) / (2 * h);
        const double actual = reg.weights()[i] - w[i];
        num += (actual - expected) * (actual - expected);
        den += expected * expected;
      }
      if (den > 1e-18) worst = std::max(worst, std::sqrt(num / den));
    }

    const auto path = dir / "repro.csv";
    write_multiclass_csv(path, generate_multiclass(500, 2));
    ExperimentConfig c;
    c.task = "multiclass";
    c.data = path.string();
    const auto data = load_dataset(c);
    const auto a = train(c, data);
    const auto b = train(c, data);
    const bool same = encode_model(a.state.learner.regressor(), c.hash()) ==
                      encode_model(b.state.learner.regressor(), c.hash());
    return Outcome{worst <= 1e-5 && same, "max relative error " + fmt(worst, 3) + " over 1000 probes, models " +
                                              (same ? "byte-identical" : "differ")};
  });

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
