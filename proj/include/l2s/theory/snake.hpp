#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

namespace l2s {

/// Longest induced path in the T-cube starting at vertex 0, found by
/// exhaustive search with symmetry pruning (the first move flips bit 0 and
/// each unused dimension is introduced in ascending order).
std::vector<std::uint32_t> longest_snake(int dims);

/// True when consecutive vertices differ in one bit and no two
/// non-consecutive vertices are adjacent.
bool is_induced_path(const std::vector<std::uint32_t>& path);

struct SnakeResult {
  int dims = 0;
  std::vector<std::uint32_t> snake;
  std::vector<double> costs;  // per vertex of the cube
  std::vector<std::uint32_t> traversal;
  std::size_t updates = 0;
  bool strictly_decreasing = false;
  bool off_path_neighbors_higher = false;
  bool locally_optimal = false;
};

nlohmann::json to_json(const SnakeResult& r);

/// Builds the adversarial cost over bit-vector policies (decreasing along a
/// longest snake, maximal elsewhere) and runs best-neighbor descent from
/// the snake's start. Throws TooLarge above 7 dimensions.
SnakeResult snake_lower_bound(int dims);

}  // namespace l2s
