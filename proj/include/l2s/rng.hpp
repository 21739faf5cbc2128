#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace l2s {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// FNV-1a over bytes.
std::uint64_t fnv1a(std::string_view bytes) noexcept;

std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) noexcept;

/// Deterministic pseudo-random index in [0, n) keyed by `key` and a payload.
/// Used for "arbitrary" reference choices that must be stable per state.
std::size_t keyed_choice(std::uint64_t key, std::span<const int> payload, std::size_t n);

/// Seeded, platform-independent random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard; conversions to doubles/indices are done here rather than via
/// <random> distributions, whose algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(mix64(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// True with probability p. p <= 0 never fires, p >= 1 always fires.
  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n); n must be positive.
  std::size_t index(std::size_t n);

  /// An independent stream derived from this stream's seed and a name.
  /// Derivation does not consume from this stream.
  Rng substream(std::string_view name) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace l2s
