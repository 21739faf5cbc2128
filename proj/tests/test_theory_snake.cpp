#include <doctest.h>

#include <bit>
#include <cstdint>
#include <vector>

#include "l2s/error.hpp"
#include "l2s/theory/snake.hpp"

using namespace l2s;

namespace {

// Longest induced path from vertex 0 by plain depth-first search: every
// extension is checked against the whole path, no symmetry pruning.
std::size_t brute_force_snake_edges(int dims) {
  std::vector<std::uint32_t> path{0};
  std::size_t best = 0;
  auto admissible = [&](std::uint32_t w) {
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      if (std::popcount(path[i] ^ w) <= 1) return false;
    }
    return path.back() != w;
  };
  auto rec = [&](auto&& self) -> void {
    best = std::max(best, path.size() - 1);
    for (int b = 0; b < dims; ++b) {
      const std::uint32_t w = path.back() ^ (1u << b);
      if (!admissible(w)) continue;
      path.push_back(w);
      self(self);
      path.pop_back();
    }
  };
  rec(rec);
  return best;
}

}  // namespace

TEST_CASE("snake search matches unpruned search") {
  for (int d = 1; d <= 5; ++d) {
    const auto s = longest_snake(d);
    CHECK(is_induced_path(s));
    CHECK(s.front() == 0);
    CHECK(s.size() - 1 == brute_force_snake_edges(d));
  }
  // Known maxima for small cubes.
  CHECK(longest_snake(3).size() - 1 == 4);
  CHECK(longest_snake(4).size() - 1 == 7);
  CHECK(longest_snake(5).size() - 1 == 13);
}

TEST_CASE("induced path check") {
  CHECK(is_induced_path({0, 1, 3, 7, 6}));
  CHECK_FALSE(is_induced_path({0, 1, 3, 2}));  // 2 touches 0
  CHECK_FALSE(is_induced_path({0, 3}));
  CHECK_FALSE(is_induced_path({0, 1, 0}));
}

TEST_CASE("descent walks the whole snake") {
  const auto r3 = snake_lower_bound(3);
  CHECK(r3.updates == 4);
  CHECK(r3.traversal == std::vector<std::uint32_t>{0b000, 0b001, 0b011, 0b111, 0b110});
  for (int d = 1; d <= 6; ++d) {
    const auto r = snake_lower_bound(d);
    CHECK(r.updates == r.snake.size() - 1);
    CHECK(r.traversal == r.snake);
    CHECK(r.strictly_decreasing);
    CHECK(r.off_path_neighbors_higher);
    CHECK(r.locally_optimal);
    for (std::size_t i = 1; i < r.traversal.size(); ++i) {
      CHECK(r.costs[r.traversal[i]] < r.costs[r.traversal[i - 1]]);
    }
  }
  const auto j = to_json(r3);
  CHECK(j["traversal"].front() == "000");
  CHECK(j["traversal"].back() == "110");
}

TEST_CASE("cube size limits") {
  CHECK_THROWS_AS(snake_lower_bound(8), Error);
  CHECK_THROWS_AS(snake_lower_bound(0), Error);
  CHECK_THROWS_AS(longest_snake(8), Error);
}
