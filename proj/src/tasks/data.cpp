#include "l2s/tasks/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>

#include "l2s/rng.hpp"

namespace l2s {

namespace {

[[noreturn]] void data_error(const std::string& source, std::size_t line, const std::string& msg) {
  throw Error(ErrorCode::ParseError, source + ":" + std::to_string(line) + ": " + msg);
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spill(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::vector<Sentence> parse_tsv(const std::string& text, const std::string& source) {
  std::vector<Sentence> out;
  Sentence cur;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  auto flush = [&] {
    if (!cur.words.empty()) out.push_back(std::move(cur));
    cur = Sentence{};
  };
  while (std::getline(in, line)) {
    ++n;
    const std::string_view view = trim(line);
    if (view.empty()) {
      flush();
      continue;
    }
    std::vector<std::string_view> cols;
    std::size_t pos = 0;
    const std::string_view raw(line);
    while (true) {
      const auto tab = raw.find('\t', pos);
      cols.push_back(trim(raw.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos)));
      if (tab == std::string_view::npos) break;
      pos = tab + 1;
    }
    if (cols.size() != 3) data_error(source, n, "expected 3 tab-separated columns, found " + std::to_string(cols.size()));
    if (cols[0].empty() || cols[1].empty()) data_error(source, n, "empty token or tag");
    int head = -1;
    if (cols[2] != "_" && (!parse_number(cols[2], head) || head < 0)) {
      data_error(source, n, "bad head '" + std::string(cols[2]) + "'");
    }
    cur.words.emplace_back(cols[0]);
    cur.tags.emplace_back(cols[1]);
    cur.heads.push_back(head);
  }
  flush();
  return out;
}

std::vector<Sentence> read_tsv(const std::filesystem::path& path) { return parse_tsv(slurp(path), path.string()); }

std::string format_tsv(const std::vector<Sentence>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    for (std::size_t i = 0; i < s.words.size(); ++i) {
      out += s.words[i] + '\t' + s.tags[i] + '\t' + (s.heads[i] < 0 ? std::string("_") : std::to_string(s.heads[i])) +
             '\n';
    }
    out += '\n';
  }
  return out;
}

void write_tsv(const std::filesystem::path& path, const std::vector<Sentence>& sentences) {
  spill(path, format_tsv(sentences));
}

MulticlassData parse_multiclass_csv(const std::string& text, std::size_t dim, const std::string& source) {
  MulticlassData data;
  std::vector<std::vector<FeatureEntry>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  std::uint32_t max_index = 0;
  bool any = false;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    const std::string_view raw(line);
    while (true) {
      const auto comma = raw.find(',', pos);
      fields.push_back(trim(raw.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (fields.size() < 3) data_error(source, n, "need a feature field and at least two costs");
    if (data.classes == 0) data.classes = fields.size() - 1;
    if (fields.size() - 1 != data.classes) {
      data_error(source, n, "expected " + std::to_string(data.classes) + " costs, found " + std::to_string(fields.size() - 1));
    }
    std::vector<FeatureEntry> entries;
    std::istringstream feats{std::string(fields[0])};
    for (std::string tok; feats >> tok;) {
      const auto colon = tok.find(':');
      std::uint32_t idx = 0;
      double val = 0.0;
      if (colon == std::string::npos || !parse_number(std::string_view(tok).substr(0, colon), idx) ||
          !parse_number(std::string_view(tok).substr(colon + 1), val) || !std::isfinite(val)) {
        data_error(source, n, "bad feature '" + tok + "'");
      }
      if (dim != 0 && idx >= dim) data_error(source, n, "feature index " + std::to_string(idx) + " >= dimension");
      max_index = std::max(max_index, idx);
      any = true;
      entries.push_back({idx, val});
    }
    MulticlassExample ex;
    for (std::size_t k = 1; k < fields.size(); ++k) {
      double c = 0.0;
      if (!parse_number(fields[k], c) || !std::isfinite(c) || c < 0.0) {
        data_error(source, n, "bad cost '" + std::string(fields[k]) + "'");
      }
      ex.costs.push_back(c);
    }
    data.examples.push_back(std::move(ex));
    rows.push_back(std::move(entries));
  }
  data.dim = dim != 0 ? dim : (any ? max_index + 1 : 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    data.examples[i].features = SparseFeatures::from_unsorted(data.dim, std::move(rows[i]));
  }
  return data;
}

MulticlassData read_multiclass_csv(const std::filesystem::path& path, std::size_t dim) {
  return parse_multiclass_csv(slurp(path), dim, path.string());
}

std::string format_multiclass_csv(const MulticlassData& data) {
  std::string out;
  for (const auto& ex : data.examples) {
    bool first = true;
    for (const auto& e : ex.features.entries()) {
      if (!first) out += ' ';
      first = false;
      out += std::to_string(e.index) + ':' + format_double(e.value);
    }
    for (double c : ex.costs) out += ',' + format_double(c);
    out += '\n';
  }
  return out;
}

void write_multiclass_csv(const std::filesystem::path& path, const MulticlassData& data) {
  spill(path, format_multiclass_csv(data));
}

std::vector<std::string> tag_set(const std::vector<Sentence>& sentences) {
  std::set<std::string> tags;
  for (const auto& s : sentences) tags.insert(s.tags.begin(), s.tags.end());
  return {tags.begin(), tags.end()};
}

// ---------------------------------------------------------------------------
// Generators

namespace {

std::string random_stem(Rng& rng, std::size_t min_len, std::size_t max_len) {
  static constexpr std::string_view kConsonants = "bcdfghjklmnprstvz";
  static constexpr std::string_view kVowels = "aeiou";
  const std::size_t len = min_len + rng.index(max_len - min_len + 1);
  std::string s;
  for (std::size_t i = 0; i < len; ++i) {
    s += i % 2 == 0 ? kConsonants[rng.index(kConsonants.size())] : kVowels[rng.index(kVowels.size())];
  }
  return s;
}

std::size_t draw_weighted(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return weights.size() - 1;
}

double gaussian(Rng& rng) {
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

std::vector<Sentence> generate_sequences(std::size_t count, std::uint64_t seed, SequenceGenOptions opts) {
  if (opts.tags < 2 || opts.min_length < 1 || opts.max_length < opts.min_length) {
    throw Error(ErrorCode::BadConfig, "invalid sequence generator options");
  }
  Rng rng = Rng(seed).substream("sequence-generator");
  const std::size_t k = opts.tags;

  // Peaked transition rows make the previous tag informative.
  std::vector<std::vector<double>> trans(k + 1, std::vector<double>(k));
  for (auto& row : trans) {
    for (auto& w : row) w = std::pow(rng.uniform(), 4.0) + 0.01;
  }
  std::vector<std::string> suffixes;
  std::set<std::string> used;
  while (suffixes.size() < k) {
    std::string s = random_stem(rng, 2, 2);
    if (used.insert(s).second) suffixes.push_back(s);
  }
  std::vector<std::vector<std::string>> lexicon(k);
  for (std::size_t t = 0; t < k; ++t) {
    for (int w = 0; w < 30; ++w) lexicon[t].push_back(random_stem(rng, 2, 4) + suffixes[t]);
  }
  std::vector<std::string> shared;
  for (int w = 0; w < 25; ++w) shared.push_back(random_stem(rng, 3, 5));

  std::vector<Sentence> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Sentence s;
    const std::size_t len = opts.min_length + rng.index(opts.max_length - opts.min_length + 1);
    std::size_t prev = k;
    for (std::size_t j = 0; j < len; ++j) {
      const std::size_t tag = draw_weighted(rng, trans[prev]);
      const auto& pool = rng.bernoulli(opts.ambiguity) ? shared : lexicon[tag];
      s.words.push_back(pool[rng.index(pool.size())]);
      s.tags.push_back("T" + std::to_string(tag));
      s.heads.push_back(-1);
      prev = tag;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sentence> generate_trees(std::size_t count, std::uint64_t seed, TreeGenOptions opts) {
  Rng rng = Rng(seed).substream("tree-generator");
  const std::vector<std::string> tags{"V", "N", "D", "A", "P", "ADV"};
  std::vector<std::vector<std::string>> lexicon(tags.size());
  for (std::size_t t = 0; t < tags.size(); ++t) {
    const std::size_t size = tags[t] == "D" || tags[t] == "P" ? 6 : 40;
    for (std::size_t w = 0; w < size; ++w) lexicon[t].push_back(random_stem(rng, 2, 6));
  }
  enum { V, N, D, A, P, ADV };

  struct Node {
    int tag;
    std::vector<Node> left, right;
  };
  std::function<Node(int, int)> expand = [&](int tag, int depth) {
    Node node{tag, {}, {}};
    const bool deep = depth < 3;
    switch (tag) {
      case V:
        if (rng.bernoulli(0.2)) node.left.push_back(expand(ADV, depth + 1));
        if (rng.bernoulli(0.9)) node.left.push_back(expand(N, depth + 1));
        if (rng.bernoulli(0.6)) node.right.push_back(expand(N, depth + 1));
        if (deep && rng.bernoulli(0.5)) node.right.push_back(expand(P, depth + 1));
        if (rng.bernoulli(0.2)) node.right.push_back(expand(ADV, depth + 1));
        break;
      case N:
        if (rng.bernoulli(0.7)) node.left.push_back(expand(D, depth + 1));
        while (node.left.size() < 3 && rng.bernoulli(0.3)) node.left.push_back(expand(A, depth + 1));
        if (deep && rng.bernoulli(0.2)) node.right.push_back(expand(P, depth + 1));
        break;
      case P: node.right.push_back(expand(N, depth + 1)); break;
      default: break;
    }
    return node;
  };

  std::vector<Sentence> out;
  out.reserve(count);
  while (out.size() < count) {
    const Node root = expand(V, 0);
    Sentence s;
    std::function<int(const Node&)> emit = [&](const Node& node) {
      std::vector<int> kids;
      for (const auto& c : node.left) kids.push_back(emit(c));
      const int self = static_cast<int>(s.words.size()) + 1;
      s.words.push_back(lexicon[static_cast<std::size_t>(node.tag)][rng.index(lexicon[static_cast<std::size_t>(node.tag)].size())]);
      s.tags.push_back(tags[static_cast<std::size_t>(node.tag)]);
      s.heads.push_back(0);
      for (const auto& c : node.right) kids.push_back(emit(c));
      for (int kid : kids) s.heads[static_cast<std::size_t>(kid) - 1] = self;
      return self;
    };
    emit(root);
    if (s.words.size() > opts.max_length) continue;
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

// Adds +o to the left half and -o to the right half of [lo, hi), recursively,
// using the same midpoint split as the label tree.
void hierarchical_means(std::vector<std::vector<double>>& means, int lo, int hi, double scale, Rng& rng) {
  if (hi - lo <= 1) return;
  const int mid = lo + (hi - lo + 1) / 2;
  std::vector<double> o(means.front().size());
  for (auto& v : o) v = scale * gaussian(rng);
  for (int c = lo; c < hi; ++c) {
    const double sign = c < mid ? 1.0 : -1.0;
    for (std::size_t j = 0; j < o.size(); ++j) means[static_cast<std::size_t>(c)][j] += sign * o[j];
  }
  hierarchical_means(means, lo, mid, scale, rng);
  hierarchical_means(means, mid, hi, scale, rng);
}

// Number of halving splits on which two labels fall on the same side.
int shared_splits(int a, int b, int lo, int hi) {
  int shared = 0;
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo + 1) / 2;
    if ((a < mid) != (b < mid)) break;
    ++shared;
    if (a < mid) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return shared;
}

}  // namespace

MulticlassData generate_multiclass(std::size_t count, std::uint64_t seed, MulticlassGenOptions opts) {
  if (opts.classes < 2 || opts.dim < 2) throw Error(ErrorCode::BadConfig, "invalid multiclass generator options");
  Rng rng = Rng(seed).substream("multiclass-generator");
  std::vector<std::vector<double>> means(opts.classes, std::vector<double>(opts.dim - 1, 0.0));
  hierarchical_means(means, 0, static_cast<int>(opts.classes), opts.spread, rng);
  MulticlassData data;
  data.dim = opts.dim;
  data.classes = opts.classes;
  data.examples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t label = rng.index(opts.classes);
    std::vector<FeatureEntry> entries;
    for (std::size_t j = 0; j + 1 < opts.dim; ++j) {
      entries.push_back({static_cast<std::uint32_t>(j), means[label][j] + gaussian(rng)});
    }
    entries.push_back({static_cast<std::uint32_t>(opts.dim - 1), 1.0});
    if (rng.bernoulli(opts.label_noise)) label = rng.index(opts.classes);
    MulticlassExample ex;
    ex.features = SparseFeatures::from_unsorted(opts.dim, std::move(entries));
    ex.costs.assign(opts.classes, 1.0);
    ex.costs[label] = 0.0;
    if (opts.graded_costs) {
      int depth = 0;
      while ((std::size_t{1} << depth) < opts.classes) ++depth;
      const int k = static_cast<int>(opts.classes);
      for (int c = 0; c < k; ++c) {
        if (c == static_cast<int>(label)) continue;
        ex.costs[static_cast<std::size_t>(c)] =
            static_cast<double>(depth - shared_splits(c, static_cast<int>(label), 0, k)) / depth;
      }
    }
    data.examples.push_back(std::move(ex));
  }
  return data;
}

bool is_projective_tree(const std::vector<int>& heads) {
  const int n = static_cast<int>(heads.size());
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const int h = heads[static_cast<std::size_t>(i)];
    if (h < 0 || h > n || h == i + 1) return false;
    roots += h == 0;
  }
  if (roots != 1) return false;
  // Acyclic: every token reaches the root.
  for (int i = 1; i <= n; ++i) {
    int cur = i;
    for (int steps = 0; cur != 0; ++steps) {
      if (steps > n) return false;
      cur = heads[static_cast<std::size_t>(cur) - 1];
    }
  }
  // No crossing arcs.
  for (int i = 1; i <= n; ++i) {
    const int a = std::min(i, heads[static_cast<std::size_t>(i) - 1]);
    const int b = std::max(i, heads[static_cast<std::size_t>(i) - 1]);
    for (int j = 1; j <= n; ++j) {
      const int c = std::min(j, heads[static_cast<std::size_t>(j) - 1]);
      const int d = std::max(j, heads[static_cast<std::size_t>(j) - 1]);
      if (a < c && c < b && b < d) return false;
    }
  }
  return true;
}

}  // namespace l2s
