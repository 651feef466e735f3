#include "f2v/feature2vec.hpp"

#include <algorithm>
#include <numeric>

namespace f2v {
namespace {

F2VModel init_model_with(const PropertyNorms& norms, const EmbeddingMatrix& words,
                         const F2VConfig& config, Rng& rng) {
  config.validate();
  if (config.dim != words.dim())
    throw InputError("init_model: config.dim " + std::to_string(config.dim) +
                     " != word embedding dim " + std::to_string(words.dim()));

  F2VModel model;
  model.features = norms.features;
  model.word_embeddings = &words;
  model.config = config;

  const Index n = norms.features.size();
  const Scalar scale = config.effective_init_scale();
  model.feature_embeddings.resize(n, config.dim);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < config.dim; ++j)
      model.feature_embeddings(i, j) = rng.uniform(-scale, scale);

  model.adam.first_moment = Matrix::Zero(n, config.dim);
  model.adam.second_moment = Matrix::Zero(n, config.dim);
  model.adam.step = 0;
  return model;
}

}  // namespace

void F2VConfig::validate() const {
  if (dim <= 0) throw InputError("f2v config: dim must be positive");
  if (!(learning_rate > 0)) throw InputError("f2v config: learning_rate must be positive");
  if (epochs < 0) throw InputError("f2v config: epochs must be >= 0");
  if (negative_rate < 1) throw InputError("f2v config: negative_rate must be >= 1");
  if (batch_size < 1) throw InputError("f2v config: batch_size must be >= 1");
  if (!(adam_beta1 > 0 && adam_beta1 < 1) || !(adam_beta2 > 0 && adam_beta2 < 1))
    throw InputError("f2v config: betas must be in (0, 1)");
  if (!(adam_epsilon > 0)) throw InputError("f2v config: adam_epsilon must be positive");
  if (init_scale < 0) throw InputError("f2v config: init_scale must be positive");
}

F2VModel init_model(const PropertyNorms& norms, const EmbeddingMatrix& words,
                    const F2VConfig& config) {
  Rng rng(config.seed);
  return init_model_with(norms, words, config, rng);
}

EpochSamples build_epoch_samples(const PropertyNorms& norms, const DataSplit& split,
                                 const F2VConfig& config, Rng& rng) {
  if (split.train_concepts.empty()) throw InputError("build_epoch_samples: empty train split");
  const Index n_features = norms.features.size();

  const auto gold = gold_feature_sets(norms);
  std::vector<char> in_train(static_cast<std::size_t>(norms.concepts.size()), 0);
  for (const Index c : split.train_concepts) {
    in_train[static_cast<std::size_t>(c)] = 1;
    if (static_cast<Index>(gold[static_cast<std::size_t>(c)].size()) == n_features)
      throw Error("build_epoch_samples: concept '" + norms.concepts.at(c) +
                  "' lists every feature; negative sampling is unsatisfiable");
  }

  const auto is_gold = [&gold](Index concept_id, Index feature) {
    const auto& fs = gold[static_cast<std::size_t>(concept_id)];
    return std::binary_search(fs.begin(), fs.end(), feature);
  };

  EpochSamples samples;
  for (const NormTriple& t : norms.triples) {
    if (!in_train[static_cast<std::size_t>(t.concept_id)]) continue;
    for (int rep = 0; rep < t.production_frequency; ++rep) {
      samples.positives.push_back({t.concept_id, t.feature});
      for (int neg = 0; neg < config.negative_rate; ++neg) {
        Index feature;
        do {
          feature = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n_features)));
        } while (is_gold(t.concept_id, feature));
        samples.negatives.push_back({t.concept_id, feature});
      }
    }
  }
  return samples;
}

PairGrad pair_loss_and_grad(const F2VModel& model, Eigen::Ref<const Vector> word_vec,
                            Index feature, PairLabel label) {
  if (feature < 0 || feature >= model.feature_embeddings.rows())
    throw Error("pair_loss_and_grad: feature index out of range");

  const Scalar s = model.feature_embeddings.row(feature).transpose().dot(word_vec);
  PairGrad result;
  if (label == PairLabel::positive) {
    result.loss = softplus(-s);  // -log sigma(s)
    result.grad = (stable_sigmoid(s) - Scalar(1)) * word_vec;
  } else {
    const Scalar inv_k = Scalar(1) / static_cast<Scalar>(model.config.negative_rate);
    result.loss = inv_k * softplus(s);  // -(1/k) log sigma(-s)
    result.grad = (inv_k * stable_sigmoid(s)) * word_vec;
  }
  return result;
}

void adam_update(F2VModel& model, const std::unordered_map<Index, Vector>& grads) {
  const F2VConfig& cfg = model.config;
  AdamState& adam = model.adam;
  adam.step += 1;

  const Scalar bias1 = Scalar(1) - std::pow(cfg.adam_beta1, static_cast<Scalar>(adam.step));
  const Scalar bias2 = Scalar(1) - std::pow(cfg.adam_beta2, static_cast<Scalar>(adam.step));

  for (const auto& [row, grad] : grads) {
    if (row < 0 || row >= model.feature_embeddings.rows())
      throw Error("adam_update: feature index out of range");
    if (!grad.allFinite())
      throw Error("adam_update: non-finite gradient for feature '" + model.features.at(row) +
                  "'");
    const auto g = grad.transpose().array();
    auto m = adam.first_moment.row(row).array();
    auto v = adam.second_moment.row(row).array();
    m = cfg.adam_beta1 * m + (Scalar(1) - cfg.adam_beta1) * g;
    v = cfg.adam_beta2 * v + (Scalar(1) - cfg.adam_beta2) * g.square();
    model.feature_embeddings.row(row).array() -=
        cfg.learning_rate * (m / bias1) / ((v / bias2).sqrt() + cfg.adam_epsilon);
  }
}

TrainResult train(const PropertyNorms& norms, const std::vector<Index>& concept_rows,
                  const DataSplit& split, const EmbeddingMatrix& words,
                  const F2VConfig& config) {
  if (concept_rows.size() != static_cast<std::size_t>(norms.concepts.size()))
    throw Error("train: concept_rows does not cover the norm concepts");
  for (const Index c : split.train_concepts)
    if (c < 0 || c >= norms.concepts.size())
      throw Error("train: split references an unknown concept index");

  Rng rng(config.seed);
  TrainResult result;
  result.model = init_model_with(norms, words, config, rng);
  F2VModel& model = result.model;

  struct LabeledSample {
    SamplePair pair;
    PairLabel label;
  };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const EpochSamples samples = build_epoch_samples(norms, split, config, rng);

    std::vector<LabeledSample> order;
    order.reserve(samples.positives.size() + samples.negatives.size());
    for (const SamplePair& p : samples.positives) order.push_back({p, PairLabel::positive});
    for (const SamplePair& p : samples.negatives) order.push_back({p, PairLabel::negative});
    rng.shuffle(order);

    EpochStats stats;
    stats.positive_count = static_cast<Index>(samples.positives.size());
    stats.negative_count = static_cast<Index>(samples.negatives.size());

    std::unordered_map<Index, Vector> batch_grads;
    std::size_t in_batch = 0;
    const auto flush = [&] {
      if (in_batch == 0) return;
      adam_update(model, batch_grads);
      batch_grads.clear();
      in_batch = 0;
    };

    for (const LabeledSample& sample : order) {
      const Index word_row = concept_rows[static_cast<std::size_t>(sample.pair.concept_id)];
      const PairGrad pg =
          pair_loss_and_grad(model, words.row(word_row).transpose(), sample.pair.feature,
                             sample.label);
      if (sample.label == PairLabel::positive)
        stats.positive_loss += pg.loss;
      else
        stats.negative_loss += pg.loss;

      auto [it, fresh] = batch_grads.try_emplace(sample.pair.feature, pg.grad);
      if (!fresh) it->second += pg.grad;
      if (++in_batch == static_cast<std::size_t>(config.batch_size)) flush();
    }
    flush();

    if (!model.feature_embeddings.allFinite())
      throw Error("train: non-finite parameters after epoch " + std::to_string(epoch + 1));

    const Index n_samples = stats.positive_count + stats.negative_count;
    stats.mean_loss = n_samples > 0
                          ? (stats.positive_loss + stats.negative_loss) / static_cast<Scalar>(n_samples)
                          : Scalar(0);
    result.epochs.push_back(stats);
  }
  return result;
}

std::vector<RankedFeature> rank_features_for_word(const F2VModel& model,
                                                  Eigen::Ref<const Vector> word_vec,
                                                  Index top_k) {
  if (top_k <= 0) throw InputError("rank_features_for_word: top_k must be positive");
  if (word_vec.norm() == Scalar(0))
    throw InputError("rank_features_for_word: zero query vector");

  const Index n = model.feature_embeddings.rows();
  std::vector<RankedFeature> ranked(static_cast<std::size_t>(n));
  for (Index f = 0; f < n; ++f)
    ranked[static_cast<std::size_t>(f)] = {
        f, cosine_similarity(model.feature_embeddings.row(f).transpose(), word_vec)};

  std::stable_sort(ranked.begin(), ranked.end(), [](const RankedFeature& a, const RankedFeature& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.feature < b.feature;
  });
  if (static_cast<Index>(ranked.size()) > top_k) ranked.resize(static_cast<std::size_t>(top_k));
  return ranked;
}

Vector compose_concept_embedding(const F2VModel& model, std::span<const Index> features,
                                 std::span<const Scalar> weights) {
  if (features.empty()) throw InputError("compose_concept_embedding: empty feature list");
  if (!weights.empty() && weights.size() != features.size())
    throw InputError("compose_concept_embedding: weights/features length mismatch");

  Vector sum = Vector::Zero(model.feature_embeddings.cols());
  Scalar total = 0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const Index f = features[i];
    if (f < 0 || f >= model.feature_embeddings.rows())
      throw Error("compose_concept_embedding: feature index out of range");
    const Scalar w = weights.empty() ? Scalar(1) : weights[i];
    if (!(w > 0)) throw InputError("compose_concept_embedding: weights must be positive");
    sum += w * model.feature_embeddings.row(f).transpose();
    total += w;
  }
  return sum / total;
}

Vector compose_from_norms(const F2VModel& model, const PropertyNorms& norms, Index concept_id,
                          bool weight_by_frequency) {
  std::vector<Index> features;
  std::vector<Scalar> weights;
  for (const NormTriple& t : norms.triples) {
    if (t.concept_id != concept_id) continue;
    features.push_back(t.feature);
    weights.push_back(static_cast<Scalar>(t.production_frequency));
  }
  if (features.empty())
    throw Error("compose_from_norms: concept has no gold features");
  return compose_concept_embedding(model, features,
                                   weight_by_frequency ? std::span<const Scalar>(weights)
                                                       : std::span<const Scalar>());
}

}  // namespace f2v
