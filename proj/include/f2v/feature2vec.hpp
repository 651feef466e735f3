#pragma once

#include "f2v/corpus.hpp"
#include "f2v/rng.hpp"
#include "f2v/types.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace f2v {

/// Hyperparameters for feature-embedding training.
struct F2VConfig {
  Index dim = 0;               // must equal the word-embedding dimension
  Scalar learning_rate = 1e-3;
  int epochs = 120;
  int negative_rate = 20;      // negatives drawn per positive sample
  int batch_size = 128;
  Scalar adam_beta1 = 0.9;
  Scalar adam_beta2 = 0.999;
  Scalar adam_epsilon = 1e-8;
  Scalar init_scale = 0;       // 0 -> default 0.5 / dim
  std::uint64_t seed = 42;

  Scalar effective_init_scale() const {
    return init_scale > 0 ? init_scale : Scalar(0.5) / static_cast<Scalar>(dim);
  }
  void validate() const;
};

/// First/second moment estimates, one row per feature row; step counts
/// batches, not samples.
struct AdamState {
  Matrix first_moment;
  Matrix second_moment;
  std::int64_t step = 0;
};

/// Learned feature embeddings living in the frozen pretrained word space.
struct F2VModel {
  Vocabulary features;
  Matrix feature_embeddings;  // |features| x dim, trainable
  const EmbeddingMatrix* word_embeddings = nullptr;  // frozen; not owned
  F2VConfig config;
  AdamState adam;
};

enum class PairLabel { positive, negative };

struct SamplePair {
  Index concept_id = 0;  // norms concept index
  Index feature = 0;
};

/// One epoch's worth of training pairs: every train triple materialized
/// production_frequency times, plus negative_rate fresh negatives per
/// positive (same concept, corrupted feature).
struct EpochSamples {
  std::vector<SamplePair> positives;
  std::vector<SamplePair> negatives;
};

struct PairGrad {
  Scalar loss = 0;
  Vector grad;  // d loss / d feature-row
};

struct EpochStats {
  Scalar mean_loss = 0;      // total loss / sample count
  Scalar positive_loss = 0;  // sum over positive samples
  Scalar negative_loss = 0;  // sum over negative samples, already 1/k-weighted
  Index positive_count = 0;
  Index negative_count = 0;
};

struct TrainResult {
  F2VModel model;
  std::vector<EpochStats> epochs;
};

/// sigma(x) without overflow at extreme logits.
inline Scalar stable_sigmoid(Scalar x) {
  if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

/// log(1 + e^x), finite over the whole double range.
inline Scalar softplus(Scalar x) {
  return std::max(x, Scalar(0)) + std::log1p(std::exp(-std::abs(x)));
}

/// Feature rows i.i.d. uniform on [-init_scale, +init_scale] from the seeded
/// generator; Adam moments zeroed. Deterministic given config.seed.
F2VModel init_model(const PropertyNorms& norms, const EmbeddingMatrix& words,
                    const F2VConfig& config);

/// Draws one epoch of positives and rejection-sampled negatives for the
/// train split. Throws when some concept's true features cover the whole
/// feature vocabulary (no negative exists).
EpochSamples build_epoch_samples(const PropertyNorms& norms, const DataSplit& split,
                                 const F2VConfig& config, Rng& rng);

/// Loss and gradient w.r.t. the feature row for one (word, feature) pair.
/// With s = feature_row . word_vec:
///   positive: loss = -log sigma(s),          grad = (sigma(s) - 1) * word_vec
///   negative: loss = -(1/k) log sigma(-s),   grad = (1/k) sigma(s) * word_vec
/// The word vector never receives a gradient.
PairGrad pair_loss_and_grad(const F2VModel& model, Eigen::Ref<const Vector> word_vec,
                            Index feature, PairLabel label);

/// One Adam step over the feature rows present in the batch; moments of
/// untouched rows are not decayed. Throws on non-finite gradients.
void adam_update(F2VModel& model, const std::unordered_map<Index, Vector>& grads);

/// Full training loop: per epoch, rebuild samples, shuffle, run mini-batches
/// of accumulated gradients through Adam. Single-threaded and bit-
/// deterministic given (data, config.seed).
TrainResult train(const PropertyNorms& norms, const std::vector<Index>& concept_rows,
                  const DataSplit& split, const EmbeddingMatrix& words,
                  const F2VConfig& config);

struct RankedFeature {
  Index feature = 0;
  Scalar score = 0;
};

/// All features scored by cosine similarity to the query, descending; ties
/// broken by ascending feature index. Throws on a zero query vector.
std::vector<RankedFeature> rank_features_for_word(const F2VModel& model,
                                                  Eigen::Ref<const Vector> word_vec,
                                                  Index top_k);

/// Mean of the listed feature rows; with weights, the weighted mean
/// (weights normalized to sum 1).
Vector compose_concept_embedding(const F2VModel& model, std::span<const Index> features,
                                 std::span<const Scalar> weights = {});

/// Composes a concept vector from its gold norm features, optionally
/// weighted by production frequency.
Vector compose_from_norms(const F2VModel& model, const PropertyNorms& norms, Index concept_id,
                          bool weight_by_frequency = false);

}  // namespace f2v
