#include "l2s/tasks/reference.hpp"

#include "l2s/error.hpp"
#include "l2s/rng.hpp"

namespace l2s {

std::string to_string(ReferenceQuality q) {
  switch (q) {
    case ReferenceQuality::Optimal: return "optimal";
    case ReferenceQuality::Suboptimal: return "suboptimal";
    case ReferenceQuality::Bad: return "bad";
  }
  return "?";
}

ReferenceQuality parse_reference_quality(const std::string& s) {
  if (s == "optimal") return ReferenceQuality::Optimal;
  if (s == "suboptimal") return ReferenceQuality::Suboptimal;
  if (s == "bad") return ReferenceQuality::Bad;
  throw Error(ErrorCode::BadConfig, "unknown reference quality '" + s + "'");
}

std::uint64_t reference_key(std::uint64_t seed, std::uint64_t instance) {
  return hash_combine(hash_combine(seed, fnv1a("reference")), instance);
}

std::uint32_t hash_feature(std::uint64_t template_id, std::uint64_t value, std::uint32_t buckets) {
  return static_cast<std::uint32_t>(hash_combine(template_id, value) % buckets);
}

}  // namespace l2s
