#pragma once

#include "f2v/types.hpp"
#include "f2v/vocab.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace f2v {

/// Sink for non-fatal diagnostics; defaults to stderr when empty.
using WarnFn = std::function<void(const std::string&)>;

/// Dense word-vector table, one row per vocabulary entry. Rows are frozen
/// once loaded; training never writes to them.
struct EmbeddingMatrix {
  Vocabulary vocab;
  Matrix vectors;  // |vocab| x dim

  Index dim() const { return vectors.cols(); }
  auto row(Index i) const { return vectors.row(i); }
};

/// One (concept, feature) cell of the sparse production-frequency table.
struct NormTriple {
  Index concept_id = 0;
  Index feature = 0;
  int production_frequency = 0;
};

/// Sparse concept x feature production-frequency table. Triples keep file
/// order, and both vocabularies are in first-appearance order of that list,
/// so serializing the triples in order round-trips the whole structure.
struct PropertyNorms {
  Vocabulary concepts;
  Vocabulary features;
  std::vector<NormTriple> triples;
};

/// Train/test partition of the concept indices of an aligned dataset.
struct DataSplit {
  std::vector<Index> train_concepts;  // sorted
  std::vector<Index> test_concepts;   // sorted
  std::uint64_t seed = 0;
};

/// Optional map from norm concept labels to lexicon words, for concepts whose
/// label is not itself a lexicon token (e.g. "axe_(tool)" -> "axe").
using AliasMap = std::map<std::string, std::string>;

struct AlignResult {
  PropertyNorms norms;               // reindexed to the surviving concepts/features
  std::vector<Index> concept_rows;   // concept index -> row in the embedding matrix
  std::vector<std::string> dropped;  // concept labels without a word vector
};

/// Loads a GloVe-format text file: one `word v1 ... vd` record per line,
/// single-space separated, no header. Words are lowercased; the first
/// occurrence of a duplicate word wins (with a warning).
EmbeddingMatrix parse_embedding_file(const std::filesystem::path& path,
                                     std::optional<Index> expected_dim = std::nullopt,
                                     const WarnFn& warn = {});

/// Loads a TSV with exact header `concept<TAB>feature<TAB>pf`. Names are
/// lowercased; duplicate (concept, feature) rows are an error. Rows with
/// pf < 5 draw a warning (elicitation norms keep only pf >= 5).
PropertyNorms parse_norms_file(const std::filesystem::path& path, const WarnFn& warn = {});

/// Inverse of parse_norms_file; writing then re-parsing yields an identical
/// structure.
void write_norms_file(const PropertyNorms& norms, const std::filesystem::path& path);

/// Loads a TSV of `concept<TAB>word` alias lines; blank lines and lines
/// starting with '#' are skipped.
AliasMap parse_alias_file(const std::filesystem::path& path);

/// Drops concepts without a word vector (after applying aliases) together
/// with their triples, then drops features left without triples. Throws
/// InputError when nothing survives.
AlignResult align(const PropertyNorms& norms, const EmbeddingMatrix& embeddings,
                  const AliasMap& aliases = {});

/// Seeded Fisher-Yates shuffle of the concept indices; the first n_train go
/// to train, the rest to test. Same inputs always give the same split.
DataSplit make_split(const PropertyNorms& norms, Index n_train, std::uint64_t seed);

/// Per-concept sorted lists of gold feature indices.
std::vector<std::vector<Index>> gold_feature_sets(const PropertyNorms& norms);

/// Dense |concepts| x |features| production-frequency matrix for the given
/// concept rows (regression targets; absent pairs are 0).
Matrix production_frequency_matrix(const PropertyNorms& norms,
                                   const std::vector<Index>& concepts);

}  // namespace f2v
