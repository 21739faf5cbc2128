#include "l2s/theory/snake.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "l2s/error.hpp"

namespace l2s {

namespace {

class SnakeSearch {
 public:
  explicit SnakeSearch(int dims) : dims_(dims), on_path_(std::size_t{1} << dims, 0), neighbors_on_path_(on_path_.size(), 0) {}

  std::vector<std::uint32_t> run() {
    push(0);
    if (dims_ > 0) {
      push(1);
      extend(1);
      pop();
    } else {
      best_ = path_;
    }
    return best_;
  }

 private:
  void push(std::uint32_t v) {
    path_.push_back(v);
    on_path_[v] = 1;
    for (int b = 0; b < dims_; ++b) ++neighbors_on_path_[v ^ (1u << b)];
  }

  void pop() {
    const std::uint32_t v = path_.back();
    path_.pop_back();
    on_path_[v] = 0;
    for (int b = 0; b < dims_; ++b) --neighbors_on_path_[v ^ (1u << b)];
  }

  void extend(int used) {
    if (path_.size() > best_.size()) best_ = path_;
    const std::uint32_t v = path_.back();
    const int limit = std::min(dims_, used + 1);
    for (int b = 0; b < limit; ++b) {
      const std::uint32_t w = v ^ (1u << b);
      // Only the current end may touch w.
      if (on_path_[w] || neighbors_on_path_[w] != 1) continue;
      push(w);
      extend(std::max(used, b + 1));
      pop();
    }
  }

  int dims_;
  std::vector<std::uint32_t> path_;
  std::vector<std::uint32_t> best_;
  std::vector<char> on_path_;
  std::vector<int> neighbors_on_path_;
};

}  // namespace

std::vector<std::uint32_t> longest_snake(int dims) {
  if (dims < 0 || dims > 7) throw Error(ErrorCode::TooLarge, "snake search limited to 7 dimensions");
  return SnakeSearch(dims).run();
}

bool is_induced_path(const std::vector<std::uint32_t>& path) {
  for (std::size_t i = 0; i < path.size(); ++i) {
    for (std::size_t j = i + 1; j < path.size(); ++j) {
      const int d = std::popcount(path[i] ^ path[j]);
      if (d == 0) return false;
      if ((d == 1) != (j == i + 1)) return false;
    }
  }
  return true;
}

SnakeResult snake_lower_bound(int dims) {
  if (dims < 1 || dims > 7) {
    throw Error(ErrorCode::TooLarge, "snake lower bound supports 1..7 dimensions, got " + std::to_string(dims));
  }
  SnakeResult r;
  r.dims = dims;
  r.snake = longest_snake(dims);
  const std::size_t n = std::size_t{1} << dims;
  const double length = static_cast<double>(r.snake.size() - 1);
  r.costs.assign(n, 2.0);
  for (std::size_t i = 0; i < r.snake.size(); ++i) r.costs[r.snake[i]] = 1.0 - static_cast<double>(i) / (length + 1.0);

  std::vector<char> on_path(n, 0);
  for (auto v : r.snake) on_path[v] = 1;

  std::uint32_t v = r.snake.front();
  r.traversal.push_back(v);
  r.strictly_decreasing = true;
  r.off_path_neighbors_higher = true;
  while (true) {
    std::uint32_t best = v;
    for (int b = 0; b < dims; ++b) {
      const std::uint32_t w = v ^ (1u << b);
      if (!on_path[w] && !(r.costs[w] > r.costs[v])) r.off_path_neighbors_higher = false;
      if (r.costs[w] < r.costs[best]) best = w;
    }
    if (best == v) break;
    if (!(r.costs[best] < r.costs[v])) r.strictly_decreasing = false;
    v = best;
    r.traversal.push_back(v);
  }
  r.updates = r.traversal.size() - 1;
  r.locally_optimal = true;
  for (int b = 0; b < dims; ++b) {
    if (r.costs[v ^ (1u << b)] < r.costs[v]) r.locally_optimal = false;
  }
  return r;
}

nlohmann::json to_json(const SnakeResult& r) {
  std::vector<std::string> bits;
  for (auto v : r.traversal) {
    std::string s;
    for (int b = r.dims - 1; b >= 0; --b) s += ((v >> b) & 1u) ? '1' : '0';
    bits.push_back(s);
  }
  return {{"dims", r.dims},
          {"snake_edges", r.snake.size() - 1},
          {"traversal", bits},
          {"updates", r.updates},
          {"strictly_decreasing", r.strictly_decreasing},
          {"off_path_neighbors_higher", r.off_path_neighbors_higher},
          {"locally_optimal", r.locally_optimal}};
}

}  // namespace l2s
