#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "l2s/core.hpp"

namespace l2s {

/// One sentence of a TSV corpus: token, tag, head (0 = root) per line.
struct Sentence {
  std::vector<std::string> words;
  std::vector<std::string> tags;
  std::vector<int> heads;
};

std::vector<Sentence> parse_tsv(const std::string& text, const std::string& source = "<input>");
std::vector<Sentence> read_tsv(const std::filesystem::path& path);
std::string format_tsv(const std::vector<Sentence>& sentences);
void write_tsv(const std::filesystem::path& path, const std::vector<Sentence>& sentences);

struct MulticlassExample {
  SparseFeatures features;
  std::vector<double> costs;
};

struct MulticlassData {
  std::size_t dim = 0;
  std::size_t classes = 0;
  std::vector<MulticlassExample> examples;
};

/// Rows "idx:val idx:val ...,c1,...,ck". The dimension is the largest index
/// plus one unless `dim` is given.
MulticlassData parse_multiclass_csv(const std::string& text, std::size_t dim = 0,
                                    const std::string& source = "<input>");
MulticlassData read_multiclass_csv(const std::filesystem::path& path, std::size_t dim = 0);
std::string format_multiclass_csv(const MulticlassData& data);
void write_multiclass_csv(const std::filesystem::path& path, const MulticlassData& data);

/// Sorted distinct tags of a corpus.
std::vector<std::string> tag_set(const std::vector<Sentence>& sentences);

// Seeded synthetic generators.

struct SequenceGenOptions {
  std::size_t tags = 8;
  std::size_t min_length = 5;
  std::size_t max_length = 15;
  double ambiguity = 0.15;  // chance a word comes from the shared lexicon
};
std::vector<Sentence> generate_sequences(std::size_t count, std::uint64_t seed, SequenceGenOptions opts = {});

struct TreeGenOptions {
  std::size_t max_length = 14;
};
/// Projective trees from a small tag grammar rooted in a verb.
std::vector<Sentence> generate_trees(std::size_t count, std::uint64_t seed, TreeGenOptions opts = {});

struct MulticlassGenOptions {
  std::size_t classes = 10;
  std::size_t dim = 20;
  double label_noise = 0.05;
  double spread = 0.5;  // scale of the per-split mean offsets
  bool graded_costs = true;  // wrong labels cost less the later they split from the true one
};
/// Gaussian clusters whose means nest along the label tree's halving
/// splits; unit-variance noise, a constant last feature. Costs are 0/1
/// or graded by how early a label leaves the true label's subtree.
MulticlassData generate_multiclass(std::size_t count, std::uint64_t seed, MulticlassGenOptions opts = {});

/// True when the heads form a single-rooted projective tree.
bool is_projective_tree(const std::vector<int>& heads);

}  // namespace l2s
