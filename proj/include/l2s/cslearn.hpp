#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "l2s/core.hpp"

namespace l2s {

/// One decision point: a feature vector and a cost per live action.
struct CostSensitiveExample {
  std::vector<SparseFeatures> per_action_features;
  std::vector<double> costs;
  /// Set for bandit estimates, which need not have a zero minimum.
  bool raw = false;

  std::size_t size() const noexcept { return costs.size(); }
};

enum class RateSchedule : std::uint32_t {
  InvSqrt = 0,   // eta_m = eta0 / sqrt(m)
  Constant = 1,  // eta_m = eta0
};

struct RegressorConfig {
  double eta0 = 0.5;
  RateSchedule schedule = RateSchedule::InvSqrt;
};

/// Linear least-squares regressor trained by online gradient descent.
class OnlineRegressor {
 public:
  OnlineRegressor() = default;
  OnlineRegressor(std::size_t dim, RegressorConfig config) : weights_(dim, 0.0), config_(config) {}

  std::size_t dim() const noexcept { return weights_.size(); }
  const RegressorConfig& config() const noexcept { return config_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::vector<double>& mutable_weights() noexcept { return weights_; }
  std::uint64_t update_count() const noexcept { return updates_; }
  void set_update_count(std::uint64_t m) noexcept { updates_ = m; }

  double predict(const SparseFeatures& x) const;

  /// Step size for the m-th example update (m >= 1).
  double rate(std::uint64_t m) const;

  /// w <- w - eta * 2 (<w, x> - target) x. Returns the touched indices via `touched`.
  void step(const SparseFeatures& x, double target, double eta, std::vector<std::uint32_t>* touched = nullptr);

  /// Advances the example counter and returns the rate to use for it.
  double begin_example() { return rate(++updates_); }

 private:
  std::vector<double> weights_;
  RegressorConfig config_;
  std::uint64_t updates_ = 0;
};

/// Running bookkeeping for cost-sensitive regret.
class RegretLedger {
 public:
  explicit RegretLedger(bool keep_examples = false) : keep_(keep_examples) {}

  void record(const CostSensitiveExample& example, std::size_t predicted);

  double cum_alg_cost() const noexcept { return cum_alg_cost_; }
  std::size_t count() const noexcept { return count_; }
  bool keeps_examples() const noexcept { return keep_; }
  const std::vector<CostSensitiveExample>& examples() const noexcept { return examples_; }

 private:
  bool keep_;
  double cum_alg_cost_ = 0.0;
  std::size_t count_ = 0;
  std::vector<CostSensitiveExample> examples_;
};

using Comparator = std::function<std::size_t(const CostSensitiveExample&)>;

/// cum_alg_cost minus the smallest cumulative cost any comparator would have
/// paid on the recorded stream. The ledger must keep its examples.
double cs_regret(const RegretLedger& ledger, std::span<const Comparator> comparators);
double cs_regret(const RegretLedger& ledger, std::span<const LinearPolicy> comparators);

/// Cost-sensitive one-against-all: one shared regressor predicts the cost of
/// each action's feature vector; the prediction is the argmin.
class CsoaaLearner {
 public:
  CsoaaLearner() = default;
  CsoaaLearner(std::size_t dim, RegressorConfig config, TieBreak tie = TieBreak::LowestIndex,
               bool keep_examples = false)
      : regressor_(dim, config), ledger_(keep_examples), tie_(tie) {}

  std::size_t dim() const noexcept { return regressor_.dim(); }
  TieBreak tie_break() const noexcept { return tie_; }

  std::size_t predict(const CostSensitiveExample& example) const;

  /// One OGD step per (features, cost) pair in ascending action order, all at
  /// the rate of this example. The ledger is charged for predict() first.
  void update(const CostSensitiveExample& example);

  LinearPolicy policy() const;

  const OnlineRegressor& regressor() const noexcept { return regressor_; }
  OnlineRegressor& regressor() noexcept { return regressor_; }
  const RegretLedger& ledger() const noexcept { return ledger_; }

  /// Indices touched since the last call, sorted and unique.
  std::vector<std::uint32_t> take_touched();

 private:
  void validate(const CostSensitiveExample& example) const;

  OnlineRegressor regressor_;
  RegretLedger ledger_;
  TieBreak tie_ = TieBreak::LowestIndex;
  std::vector<std::uint32_t> touched_;
};

// Model file: "L2SMODEL", u32 version, u32 schedule, u64 dim, f64 eta0,
// u64 update count, u64 config hash, then dim f64 weights. Little endian.
inline constexpr std::uint32_t kModelFormatVersion = 1;

struct ModelFile {
  OnlineRegressor regressor;
  std::uint64_t config_hash = 0;
};

void save_model(const std::filesystem::path& path, const OnlineRegressor& regressor, std::uint64_t config_hash);
ModelFile load_model(const std::filesystem::path& path);

std::vector<unsigned char> encode_model(const OnlineRegressor& regressor, std::uint64_t config_hash);
ModelFile decode_model(std::span<const unsigned char> bytes);

}  // namespace l2s
