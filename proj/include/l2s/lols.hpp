#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "l2s/core.hpp"
#include "l2s/cslearn.hpp"
#include "l2s/rng.hpp"

namespace l2s {

enum class RollIn { Reference, Learned };
enum class RollOut { Reference, Learned, Mixture };
enum class DrawGranularity { PerRollout, PerState, PerExample };

std::string to_string(RollIn r);
std::string to_string(RollOut r);
std::string to_string(DrawGranularity g);
RollIn parse_roll_in(const std::string& s);
RollOut parse_roll_out(const std::string& s);
DrawGranularity parse_granularity(const std::string& s);

struct RolloutPlan {
  RollIn roll_in = RollIn::Learned;
  RollOut roll_out = RollOut::Mixture;
  double beta = 0.5;
  DrawGranularity granularity = DrawGranularity::PerRollout;
  std::uint64_t seed = 0;
};

/// Append-only record of every learned policy pi_0 .. pi_N. Snapshots are
/// stored as sparse deltas against their predecessor, so any pi_n can be
/// rebuilt exactly without holding N dense copies. A dense checkpoint is
/// kept whenever the deltas since the last one add up to the dimension,
/// which bounds rebuild work by about two dense copies.
class PolicyHistory {
 public:
  PolicyHistory() = default;
  PolicyHistory(std::vector<double> initial, TieBreak tie) : initial_(std::move(initial)), tie_(tie) {}

  std::size_t size() const noexcept { return deltas_.size() + 1; }
  std::size_t dim() const noexcept { return initial_.size(); }
  TieBreak tie_break() const noexcept { return tie_; }

  /// Records the next snapshot given the indices that may have changed.
  void append(std::span<const double> weights, std::span<const std::uint32_t> touched);

  LinearPolicy snapshot(std::size_t n) const;

  /// Rebuilds several snapshots in one forward pass; `indices` may be unsorted.
  std::vector<LinearPolicy> snapshots(std::span<const std::size_t> indices) const;

  void save(const std::filesystem::path& path) const;
  static PolicyHistory load(const std::filesystem::path& path);

 private:
  struct Delta {
    std::vector<std::uint32_t> index;
    std::vector<double> value;
  };
  std::vector<double> initial_;
  std::vector<Delta> deltas_;
  struct Checkpoint {
    std::size_t snapshot;
    std::vector<double> weights;
  };
  std::vector<Checkpoint> checkpoints_;
  std::size_t pending_entries_ = 0;
  void note_delta(std::size_t entries);
  // Running copy of the latest weights, used to compute deltas.
  std::vector<double> latest_;
  TieBreak tie_ = TieBreak::LowestIndex;
};

struct TrainState {
  CsoaaLearner learner;
  PolicyHistory history;
  std::size_t examples_seen = 0;
  Rng mixture_rng;
  Rng averaging_rng;

  static TrainState create(std::size_t dim, RegressorConfig config, std::uint64_t seed,
                           TieBreak tie = TieBreak::LowestIndex, bool keep_examples = false);

  LinearPolicy current_policy() const { return learner.policy(); }
};

struct DecisionRecord {
  int t = 0;
  StateRef state;
  std::vector<int> actions;
  int roll_in_action = 0;
  std::vector<double> rollout_losses;
  std::vector<double> costs;
  /// Per action: fraction of roll-out steps that followed the reference
  /// (0 or 1 under PerRollout draws).
  std::vector<double> reference_share;
};

struct InstanceDiagnostics {
  std::uint64_t instance = 0;
  std::vector<DecisionRecord> decisions;
  double post_update_loss = 0.0;
};

nlohmann::json to_json(const InstanceDiagnostics& d);

struct ProcessResult {
  std::vector<CostSensitiveExample> examples;
  InstanceDiagnostics diagnostics;
};

/// One LOLS round on one structured example: roll in, deviate once at every
/// decision point, roll out, extract costs, then update on all T examples.
ProcessResult process_example(TrainState& state, const SearchTask& task, const RolloutPlan& plan);

/// c(a) = l(e(a)) - min_a' l(e(a')).
std::vector<double> extract_costs(std::span<const double> rollout_losses);

enum class PolicyChoice { Reference, Learned };

/// Bernoulli(beta) draw for mixture roll-outs.
PolicyChoice draw_rollout_policy(const RolloutPlan& plan, Rng& rng);

/// Online-to-batch average: each trajectory follows one uniformly drawn
/// historical policy.
class AveragedPolicy {
 public:
  AveragedPolicy(const PolicyHistory& history, bool include_initial);

  std::size_t pool_size() const noexcept { return last_ - first_ + 1; }
  /// Index into the history of the policy to use for one trajectory.
  std::size_t draw(Rng& rng) const { return first_ + rng.index(pool_size()); }
  LinearPolicy sample(Rng& rng) const { return history_->snapshot(draw(rng)); }
  const PolicyHistory& history() const noexcept { return *history_; }
  std::size_t first() const noexcept { return first_; }
  std::size_t last() const noexcept { return last_; }

 private:
  const PolicyHistory* history_;
  std::size_t first_;
  std::size_t last_;
};

/// Throws NoPolicies when nothing has been trained yet.
AveragedPolicy averaged_policy(const TrainState& state, bool include_initial = false);

}  // namespace l2s
