#pragma once

#include <cstdint>
#include <string>

namespace l2s {

enum class ReferenceQuality { Optimal, Suboptimal, Bad };

std::string to_string(ReferenceQuality q);
ReferenceQuality parse_reference_quality(const std::string& s);

/// Key for per-state "arbitrary" reference choices of one instance.
std::uint64_t reference_key(std::uint64_t seed, std::uint64_t instance);

/// Hashes a string feature name into [0, buckets).
std::uint32_t hash_feature(std::uint64_t template_id, std::uint64_t value, std::uint32_t buckets);

}  // namespace l2s
