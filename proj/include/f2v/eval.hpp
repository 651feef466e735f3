#pragma once

#include "f2v/corpus.hpp"
#include "f2v/feature2vec.hpp"
#include "f2v/plsr.hpp"
#include "f2v/types.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace f2v {

/// Structured metric results for one (method, dataset, split) run.
struct EvalReport {
  std::string method;
  std::string dataset;
  std::uint64_t split_seed = 0;
  std::map<int, Scalar> retrieval;  // N -> accuracy percent, test concepts
  Scalar overlap_train = 0;         // top-K feature overlap percent
  Scalar overlap_test = 0;
  std::map<std::string, std::string> parameters;  // resolved run config
};

/// For each concept with a predicted vector, ranks the pool's gold vectors
/// by cosine similarity to the prediction (ties by ascending index) and
/// reports, per N, the percentage of concepts whose own identity lands in
/// the top N. Space-agnostic: vectors may live in the feature space or the
/// word-embedding space.
std::map<int, Scalar> top_n_retrieval(const std::map<Index, Vector>& predicted,
                                      const std::map<Index, Vector>& gold,
                                      const std::vector<Index>& pool,
                                      const std::vector<int>& top_ns);

/// Ordered feature indices for a concept; must return at least as many
/// entries as the concept has gold features.
using FeatureRanker = std::function<std::vector<Index>(Index concept_id)>;

/// Mean over concepts of |top-K predicted ∩ gold| / K * 100, where K is the
/// concept's own gold feature count.
Scalar top_k_overlap(const FeatureRanker& ranker, const PropertyNorms& norms,
                     const std::vector<Index>& concepts);

/// Ranks features for an arbitrary query word vector; used by the
/// qualitative table for both model kinds.
using WordRanker =
    std::function<std::vector<RankedFeature>(Eigen::Ref<const Vector> word_vec, Index top_k)>;

struct QualitativeRow {
  std::string feature;
  Scalar score = 0;
  bool in_gold = false;
};

struct QualitativeEntry {
  std::string word;
  std::string error;  // empty on success
  std::vector<QualitativeRow> rows;
  bool ok() const { return error.empty(); }
};

/// Top-k ranked features per query word with gold-pair flags. Unknown words
/// produce per-word error entries; the rest are still processed. Passing a
/// null norms pointer leaves every flag false.
std::vector<QualitativeEntry> qualitative_table(const EmbeddingMatrix& words,
                                                const std::vector<std::string>& query_words,
                                                Index top_k, const PropertyNorms* norms,
                                                const Vocabulary& features,
                                                const WordRanker& rank);

/// Convenience overload ranking with a trained feature-embedding model.
std::vector<QualitativeEntry> qualitative_table(const F2VModel& model,
                                                const EmbeddingMatrix& words,
                                                const std::vector<std::string>& query_words,
                                                Index top_k, const PropertyNorms* norms);

struct EvalOptions {
  std::vector<int> retrieval_ns = {1, 5, 10, 20};
  bool pool_test_only = false;      // default pool: all aligned concepts
  bool weighted_compose = false;    // pf-weighted concept composition
};

/// Full protocol for a feature-embedding model: retrieval of test concepts
/// by composed word vectors against the pretrained space, plus train/test
/// feature overlap by cosine ranking.
EvalReport evaluate_f2v(const F2VModel& model, const EmbeddingMatrix& words,
                        const PropertyNorms& norms, const std::vector<Index>& concept_rows,
                        const DataSplit& split, const EvalOptions& options = {});

/// Full protocol for the regression baseline: retrieval of test concepts by
/// predicted feature vectors against the gold production-frequency vectors,
/// plus train/test feature overlap by predicted weight.
EvalReport evaluate_plsr(const PlsrModel& model, const EmbeddingMatrix& words,
                         const PropertyNorms& norms, const std::vector<Index>& concept_rows,
                         const DataSplit& split, const EvalOptions& options = {});

/// Aligned plain-text rendering of a report.
std::string render_table(const EvalReport& report);

/// JSON rendering with stable key order; numbers are exact doubles.
std::string render_json(const EvalReport& report);

}  // namespace f2v
