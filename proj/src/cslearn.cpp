#include "l2s/cslearn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

namespace l2s {

double OnlineRegressor::predict(const SparseFeatures& x) const {
  if (x.dim() != weights_.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "feature dimension " + std::to_string(x.dim()) + " != model dimension " + std::to_string(weights_.size()));
  }
  return x.dot(weights_);
}

double OnlineRegressor::rate(std::uint64_t m) const {
  switch (config_.schedule) {
    case RateSchedule::InvSqrt: return config_.eta0 / std::sqrt(static_cast<double>(std::max<std::uint64_t>(m, 1)));
    case RateSchedule::Constant: return config_.eta0;
  }
  return config_.eta0;
}

void OnlineRegressor::step(const SparseFeatures& x, double target, double eta, std::vector<std::uint32_t>* touched) {
  const double residual = predict(x) - target;
  const double scale = -eta * 2.0 * residual;
  if (scale == 0.0) return;
  for (const auto& e : x.entries()) {
    weights_[e.index] += scale * e.value;
    if (touched != nullptr) touched->push_back(e.index);
  }
}

void RegretLedger::record(const CostSensitiveExample& example, std::size_t predicted) {
  cum_alg_cost_ += example.costs[predicted];
  ++count_;
  if (keep_) examples_.push_back(example);
}

double cs_regret(const RegretLedger& ledger, std::span<const Comparator> comparators) {
  if (ledger.count() == 0) return 0.0;
  if (!ledger.keeps_examples()) {
    throw Error(ErrorCode::BadConfig, "cs_regret needs a ledger that keeps its examples");
  }
  if (comparators.empty()) throw Error(ErrorCode::BadConfig, "cs_regret needs at least one comparator");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& h : comparators) {
    double total = 0.0;
    for (const auto& ex : ledger.examples()) total += ex.costs[h(ex)];
    best = std::min(best, total);
  }
  return ledger.cum_alg_cost() - best;
}

double cs_regret(const RegretLedger& ledger, std::span<const LinearPolicy> comparators) {
  std::vector<Comparator> fns;
  fns.reserve(comparators.size());
  for (const auto& p : comparators) {
    fns.emplace_back([&p](const CostSensitiveExample& ex) { return p.act(ex.per_action_features); });
  }
  return cs_regret(ledger, fns);
}

void CsoaaLearner::validate(const CostSensitiveExample& example) const {
  if (example.per_action_features.empty()) throw Error(ErrorCode::EmptyActionSet, "example with no actions");
  if (example.per_action_features.size() != example.costs.size()) {
    throw Error(ErrorCode::DimensionMismatch, "feature list and cost vector differ in length");
  }
  for (const auto& x : example.per_action_features) {
    if (x.dim() != regressor_.dim()) {
      throw Error(ErrorCode::DimensionMismatch, "feature dimension " + std::to_string(x.dim()) +
                                                    " != learner dimension " + std::to_string(regressor_.dim()));
    }
  }
  for (double c : example.costs) {
    if (!std::isfinite(c)) throw Error(ErrorCode::NonFiniteCost, "cost vector contains a non-finite entry");
  }
}

std::size_t CsoaaLearner::predict(const CostSensitiveExample& example) const {
  if (example.per_action_features.empty()) throw Error(ErrorCode::EmptyActionSet, "example with no actions");
  std::vector<double> scores(example.per_action_features.size());
  for (std::size_t a = 0; a < scores.size(); ++a) scores[a] = regressor_.predict(example.per_action_features[a]);
  return argmin_index(scores, tie_);
}

void CsoaaLearner::update(const CostSensitiveExample& example) {
  validate(example);
  ledger_.record(example, predict(example));
  const double eta = regressor_.begin_example();
  for (std::size_t a = 0; a < example.size(); ++a) {
    regressor_.step(example.per_action_features[a], example.costs[a], eta, &touched_);
  }
}

LinearPolicy CsoaaLearner::policy() const {
  return LinearPolicy(std::vector<double>(regressor_.weights().begin(), regressor_.weights().end()), tie_);
}

std::vector<std::uint32_t> CsoaaLearner::take_touched() {
  std::vector<std::uint32_t> out;
  out.swap(touched_);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

constexpr char kMagic[8] = {'L', '2', 'S', 'M', 'O', 'D', 'E', 'L'};

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
void put_f64(std::vector<unsigned char>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> bytes) : bytes_(bytes) {}
  std::uint64_t u(int width) {
    if (pos_ + static_cast<std::size_t>(width) > bytes_.size()) {
      throw Error(ErrorCode::ParseError, "model file truncated at byte " + std::to_string(pos_));
    }
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  double f64() { return std::bit_cast<double>(u(8)); }
  std::span<const unsigned char> take(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw Error(ErrorCode::ParseError, "model file truncated");
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<unsigned char> encode_model(const OnlineRegressor& regressor, std::uint64_t config_hash) {
  std::vector<unsigned char> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kModelFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(regressor.config().schedule));
  put_u64(out, regressor.dim());
  put_f64(out, regressor.config().eta0);
  put_u64(out, regressor.update_count());
  put_u64(out, config_hash);
  for (double w : regressor.weights()) put_f64(out, w);
  return out;
}

ModelFile decode_model(std::span<const unsigned char> bytes) {
  Reader in(bytes);
  auto magic = in.take(sizeof(kMagic));
  if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic))) {
    throw Error(ErrorCode::ParseError, "not a model file (bad magic)");
  }
  const auto version = static_cast<std::uint32_t>(in.u(4));
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::ParseError, "unsupported model format version " + std::to_string(version));
  }
  const auto schedule = static_cast<std::uint32_t>(in.u(4));
  if (schedule > static_cast<std::uint32_t>(RateSchedule::Constant)) {
    throw Error(ErrorCode::ParseError, "unknown learning-rate schedule " + std::to_string(schedule));
  }
  const std::uint64_t dim = in.u(8);
  RegressorConfig config;
  config.schedule = static_cast<RateSchedule>(schedule);
  config.eta0 = in.f64();
  const std::uint64_t updates = in.u(8);
  ModelFile file;
  file.config_hash = in.u(8);
  if (dim != in.remaining() / 8 || in.remaining() % 8 != 0) {
    throw Error(ErrorCode::ParseError, "model declares " + std::to_string(dim) + " weights but holds " +
                                           std::to_string(in.remaining() / 8));
  }
  file.regressor = OnlineRegressor(dim, config);
  file.regressor.set_update_count(updates);
  auto& w = file.regressor.mutable_weights();
  for (std::uint64_t i = 0; i < dim; ++i) w[i] = in.f64();
  if (!in.done()) throw Error(ErrorCode::ParseError, "trailing bytes after model weights");
  return file;
}

void save_model(const std::filesystem::path& path, const OnlineRegressor& regressor, std::uint64_t config_hash) {
  const auto bytes = encode_model(regressor, config_hash);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_model(bytes);
}

}  // namespace l2s
