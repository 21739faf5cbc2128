#include "l2s/rng.hpp"

#include "l2s/error.hpp"

namespace l2s {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) noexcept {
  return mix64(seed ^ (mix64(value) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

std::size_t keyed_choice(std::uint64_t key, std::span<const int> payload, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::EmptyActionSet, "keyed_choice over zero options");
  std::uint64_t h = mix64(key);
  for (int v : payload) h = hash_combine(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(v)));
  return static_cast<std::size_t>(h % n);
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::EmptyActionSet, "Rng::index with n == 0");
  // Rejection sampling removes modulo bias.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t x;
  do {
    x = next();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

Rng Rng::substream(std::string_view name) const { return Rng(hash_combine(seed_, fnv1a(name))); }

}  // namespace l2s
