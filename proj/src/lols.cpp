#include "l2s/lols.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>

namespace l2s {

std::string to_string(RollIn r) { return r == RollIn::Reference ? "reference" : "learned"; }

std::string to_string(RollOut r) {
  switch (r) {
    case RollOut::Reference: return "reference";
    case RollOut::Learned: return "learned";
    case RollOut::Mixture: return "mixture";
  }
  return "?";
}

std::string to_string(DrawGranularity g) {
  switch (g) {
    case DrawGranularity::PerRollout: return "per-rollout";
    case DrawGranularity::PerState: return "per-state";
    case DrawGranularity::PerExample: return "per-example";
  }
  return "?";
}

RollIn parse_roll_in(const std::string& s) {
  if (s == "reference" || s == "ref") return RollIn::Reference;
  if (s == "learned" || s == "learn") return RollIn::Learned;
  throw Error(ErrorCode::BadConfig, "unknown roll-in '" + s + "'");
}

RollOut parse_roll_out(const std::string& s) {
  if (s == "reference" || s == "ref") return RollOut::Reference;
  if (s == "learned" || s == "learn") return RollOut::Learned;
  if (s == "mixture" || s == "mix") return RollOut::Mixture;
  throw Error(ErrorCode::BadConfig, "unknown roll-out '" + s + "'");
}

DrawGranularity parse_granularity(const std::string& s) {
  if (s == "per-rollout") return DrawGranularity::PerRollout;
  if (s == "per-state") return DrawGranularity::PerState;
  if (s == "per-example") return DrawGranularity::PerExample;
  throw Error(ErrorCode::BadConfig, "unknown draw granularity '" + s + "'");
}

// ---------------------------------------------------------------------------
// PolicyHistory

void PolicyHistory::append(std::span<const double> weights, std::span<const std::uint32_t> touched) {
  if (weights.size() != initial_.size()) throw Error(ErrorCode::DimensionMismatch, "history dimension mismatch");
  if (latest_.empty()) latest_ = initial_;
  Delta delta;
  for (std::uint32_t i : touched) {
    if (std::bit_cast<std::uint64_t>(weights[i]) != std::bit_cast<std::uint64_t>(latest_[i])) {
      delta.index.push_back(i);
      delta.value.push_back(weights[i]);
      latest_[i] = weights[i];
    }
  }
  const std::size_t entries = delta.index.size();
  deltas_.push_back(std::move(delta));
  note_delta(entries);
}

void PolicyHistory::note_delta(std::size_t entries) {
  pending_entries_ += entries;
  if (pending_entries_ >= initial_.size() && pending_entries_ > 0) {
    checkpoints_.push_back({size() - 1, latest_});
    pending_entries_ = 0;
  }
}

LinearPolicy PolicyHistory::snapshot(std::size_t n) const {
  const std::size_t idx[] = {n};
  return std::move(snapshots(idx).front());
}

std::vector<LinearPolicy> PolicyHistory::snapshots(std::span<const std::size_t> indices) const {
  std::vector<std::size_t> order(indices.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return indices[a] < indices[b]; });
  std::vector<LinearPolicy> out(indices.size());
  std::vector<double> w;
  std::size_t applied = 0;  // w currently equals snapshot `applied`
  bool loaded = false;
  for (std::size_t k : order) {
    const std::size_t n = indices[k];
    if (n >= size()) throw Error(ErrorCode::NoPolicies, "snapshot " + std::to_string(n) + " out of range");
    // Jump to the latest checkpoint at or before n when it is ahead of w.
    auto it = std::upper_bound(checkpoints_.begin(), checkpoints_.end(), n,
                               [](std::size_t v, const Checkpoint& c) { return v < c.snapshot; });
    if (it != checkpoints_.begin() && (!loaded || std::prev(it)->snapshot > applied)) {
      --it;
      w = it->weights;
      applied = it->snapshot;
      loaded = true;
    } else if (!loaded) {
      w = initial_;
      applied = 0;
      loaded = true;
    }
    while (applied < n) {
      const auto& d = deltas_[applied];
      for (std::size_t j = 0; j < d.index.size(); ++j) w[d.index[j]] = d.value[j];
      ++applied;
    }
    out[k] = LinearPolicy(w, tie_);
  }
  return out;
}

namespace {

constexpr char kHistoryMagic[8] = {'L', '2', 'S', 'H', 'I', 'S', 'T', '1'};

template <typename T>
void write_raw(std::ostream& out, T v) {
  auto bits = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
  // Stored little endian regardless of host order.
  if constexpr (std::endian::native != std::endian::little) std::reverse(bits.begin(), bits.end());
  out.write(reinterpret_cast<const char*>(bits.data()), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  std::array<unsigned char, sizeof(T)> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), sizeof(T));
  if (!in) throw Error(ErrorCode::ParseError, "policy history truncated");
  if constexpr (std::endian::native != std::endian::little) std::reverse(buf.begin(), buf.end());
  return std::bit_cast<T>(buf);
}

}  // namespace

void PolicyHistory::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(kHistoryMagic, sizeof(kHistoryMagic));
  write_raw<std::uint32_t>(out, tie_ == TieBreak::LowestIndex ? 0u : 1u);
  write_raw<std::uint64_t>(out, initial_.size());
  write_raw<std::uint64_t>(out, deltas_.size());
  for (double w : initial_) write_raw<double>(out, w);
  for (const auto& d : deltas_) {
    write_raw<std::uint64_t>(out, d.index.size());
    for (std::size_t j = 0; j < d.index.size(); ++j) {
      write_raw<std::uint32_t>(out, d.index[j]);
      write_raw<double>(out, d.value[j]);
    }
  }
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

PolicyHistory PolicyHistory::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(std::begin(magic), std::end(magic), std::begin(kHistoryMagic))) {
    throw Error(ErrorCode::ParseError, "not a policy history file");
  }
  const auto tie = read_raw<std::uint32_t>(in) == 0 ? TieBreak::LowestIndex : TieBreak::HighestIndex;
  const auto dim = read_raw<std::uint64_t>(in);
  const auto count = read_raw<std::uint64_t>(in);
  std::vector<double> initial(dim);
  for (auto& w : initial) w = read_raw<double>(in);
  PolicyHistory h(std::move(initial), tie);
  h.latest_ = h.initial_;
  h.deltas_.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) {
    Delta d;
    const auto n = read_raw<std::uint64_t>(in);
    d.index.resize(n);
    d.value.resize(n);
    for (std::uint64_t j = 0; j < n; ++j) {
      d.index[j] = read_raw<std::uint32_t>(in);
      d.value[j] = read_raw<double>(in);
      if (d.index[j] >= dim) throw Error(ErrorCode::ParseError, "history index out of range");
      h.latest_[d.index[j]] = d.value[j];
    }
    h.deltas_.push_back(std::move(d));
    h.note_delta(n);
  }
  return h;
}

// ---------------------------------------------------------------------------
// Training loop

TrainState TrainState::create(std::size_t dim, RegressorConfig config, std::uint64_t seed, TieBreak tie,
                              bool keep_examples) {
  TrainState s;
  s.learner = CsoaaLearner(dim, config, tie, keep_examples);
  s.history = PolicyHistory(std::vector<double>(dim, 0.0), tie);
  const Rng root(seed);
  s.mixture_rng = root.substream("mixture");
  s.averaging_rng = root.substream("averaging");
  return s;
}

std::vector<double> extract_costs(std::span<const double> rollout_losses) {
  if (rollout_losses.empty()) throw Error(ErrorCode::EmptyActionSet, "extract_costs on an empty vector");
  for (double v : rollout_losses) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "roll-out loss is not finite");
  }
  const double lo = *std::min_element(rollout_losses.begin(), rollout_losses.end());
  std::vector<double> costs(rollout_losses.size());
  for (std::size_t i = 0; i < costs.size(); ++i) costs[i] = rollout_losses[i] - lo;
  return costs;
}

PolicyChoice draw_rollout_policy(const RolloutPlan& plan, Rng& rng) {
  return rng.bernoulli(plan.beta) ? PolicyChoice::Reference : PolicyChoice::Learned;
}

namespace {

struct RolloutOutcome {
  double loss;
  double reference_share;
};

// Completes a trajectory from `state` (already past the deviation).
RolloutOutcome roll_out(const SearchTask& task, StateRef state, const LinearPolicy& learned, const RolloutPlan& plan,
                        std::optional<PolicyChoice> example_draw, Rng& rng, std::vector<int>& legal) {
  static const ReferencePolicy reference;
  const int remaining = task.horizon() - state.depth;
  int reference_steps = 0;

  const Policy* fixed = nullptr;
  if (plan.roll_out == RollOut::Reference) {
    fixed = &reference;
  } else if (plan.roll_out == RollOut::Learned) {
    fixed = &learned;
  } else if (plan.granularity != DrawGranularity::PerState) {
    const PolicyChoice c = example_draw ? *example_draw : draw_rollout_policy(plan, rng);
    fixed = c == PolicyChoice::Reference ? static_cast<const Policy*>(&reference)
                                                                       : static_cast<const Policy*>(&learned);
  }

  while (state.depth < task.horizon()) {
    task.legal_actions(state, legal);
    if (legal.empty()) throw Error(ErrorCode::NoLegalAction, "no legal action during roll-out");
    const Policy* p = fixed;
    if (p == nullptr) {
      p = draw_rollout_policy(plan, rng) == PolicyChoice::Reference ? static_cast<const Policy*>(&reference)
                                                                     : static_cast<const Policy*>(&learned);
    }
    if (p == &reference) ++reference_steps;
    task.advance(state, legal[p->choose(task, state, legal)]);
  }
  double share = 0.0;
  if (remaining > 0) {
    share = static_cast<double>(reference_steps) / remaining;
  } else if (fixed == &reference) {
    share = 1.0;
  }
  return {end_loss(task, state), share};
}

}  // namespace

ProcessResult process_example(TrainState& state, const SearchTask& task, const RolloutPlan& plan) {
  if (!task.has_gold()) throw Error(ErrorCode::MissingGold, "LOLS needs a labelled instance for its reference");
  if (task.feature_dim() != state.learner.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "task feature dimension differs from the learner's");
  }

  // Roll-in and learned roll-outs use pi_i as of the start of the instance.
  const LinearPolicy learned = state.learner.policy();
  const ReferencePolicy reference;
  const Policy& roll_in = plan.roll_in == RollIn::Reference ? static_cast<const Policy&>(reference)
                                                            : static_cast<const Policy&>(learned);

  ProcessResult result;
  result.diagnostics.instance = task.instance_id();
  std::vector<int> legal;
  std::vector<int> scratch_legal;

  std::optional<PolicyChoice> example_draw;
  if (plan.roll_out == RollOut::Mixture && plan.granularity == DrawGranularity::PerExample) {
    example_draw = draw_rollout_policy(plan, state.mixture_rng);
  }

  StateRef s = task.start();
  for (int t = 0; t < task.horizon(); ++t) {
    legal = checked_legal_actions(task, s);
    DecisionRecord rec;
    rec.t = t;
    rec.state = s;
    rec.actions = legal;
    rec.rollout_losses.resize(legal.size());
    rec.reference_share.resize(legal.size());
    for (std::size_t a = 0; a < legal.size(); ++a) {
      StateRef deviated = transition(task, s, legal[a]);
      const auto out = roll_out(task, std::move(deviated), learned, plan, example_draw, state.mixture_rng, scratch_legal);
      rec.rollout_losses[a] = out.loss;
      rec.reference_share[a] = out.reference_share;
    }
    rec.costs = extract_costs(rec.rollout_losses);

    CostSensitiveExample ex;
    task.action_features(s, legal, ex.per_action_features);
    ex.costs = rec.costs;
    result.examples.push_back(std::move(ex));

    const std::size_t pick = roll_in.choose(task, s, legal);
    rec.roll_in_action = legal[pick];
    result.diagnostics.decisions.push_back(std::move(rec));
    task.advance(s, legal[pick]);
  }

  for (const auto& ex : result.examples) state.learner.update(ex);
  const auto touched = state.learner.take_touched();
  state.history.append(state.learner.regressor().weights(), touched);
  ++state.examples_seen;

  const LinearPolicy updated = state.learner.policy();
  result.diagnostics.post_update_loss = end_loss(task, run_to_end(task, updated, task.start()));
  return result;
}

nlohmann::json to_json(const InstanceDiagnostics& d) {
  nlohmann::json j;
  j["instance"] = d.instance;
  auto& decisions = j["decisions"] = nlohmann::json::array();
  for (const auto& r : d.decisions) {
    decisions.push_back({{"t", r.t},
                         {"actions", r.actions},
                         {"chosen", r.roll_in_action},
                         {"losses", r.rollout_losses},
                         {"costs", r.costs},
                         {"reference_share", r.reference_share}});
  }
  j["post_update_loss"] = d.post_update_loss;
  return j;
}

AveragedPolicy::AveragedPolicy(const PolicyHistory& history, bool include_initial)
    : history_(&history), first_(include_initial ? 0 : 1), last_(history.size() - 1) {
  if (history.size() < 2 && !include_initial) throw Error(ErrorCode::NoPolicies, "no trained policies to average");
}

AveragedPolicy averaged_policy(const TrainState& state, bool include_initial) {
  if (state.examples_seen == 0 && !include_initial) {
    throw Error(ErrorCode::NoPolicies, "averaged_policy before any training example");
  }
  return AveragedPolicy(state.history, include_initial);
}

}  // namespace l2s
