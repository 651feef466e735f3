#include "f2v/eval.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace f2v {
namespace {

std::string format_percent(Scalar value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", value);
  return buf;
}

std::map<Index, Vector> gold_word_vectors(const EmbeddingMatrix& words,
                                          const std::vector<Index>& concept_rows,
                                          const std::vector<Index>& concepts) {
  std::map<Index, Vector> gold;
  for (const Index c : concepts)
    gold.emplace(c, words.row(concept_rows[static_cast<std::size_t>(c)]).transpose());
  return gold;
}

std::vector<Index> all_concepts(const PropertyNorms& norms) {
  std::vector<Index> ids(static_cast<std::size_t>(norms.concepts.size()));
  for (Index c = 0; c < norms.concepts.size(); ++c) ids[static_cast<std::size_t>(c)] = c;
  return ids;
}

}  // namespace

std::map<int, Scalar> top_n_retrieval(const std::map<Index, Vector>& predicted,
                                      const std::map<Index, Vector>& gold,
                                      const std::vector<Index>& pool,
                                      const std::vector<int>& top_ns) {
  if (pool.empty()) throw InputError("top_n_retrieval: empty pool");
  if (predicted.empty()) throw InputError("top_n_retrieval: nothing to evaluate");
  for (const Index c : pool)
    if (gold.find(c) == gold.end())
      throw InputError("top_n_retrieval: pool concept " + std::to_string(c) +
                       " has no gold vector");
  for (const auto& [c, vec] : predicted) {
    (void)vec;
    if (std::find(pool.begin(), pool.end(), c) == pool.end())
      throw InputError("top_n_retrieval: evaluated concept " + std::to_string(c) +
                       " is not in the pool");
  }

  // Rank of each evaluated concept's own identity among the pool, under
  // descending cosine with ties broken by ascending concept index.
  std::vector<Index> ranks;
  ranks.reserve(predicted.size());
  for (const auto& [c, prediction] : predicted) {
    const Scalar own_score = cosine_similarity(prediction, gold.at(c));
    Index rank = 1;
    for (const Index other : pool) {
      if (other == c) continue;
      const Scalar score = cosine_similarity(prediction, gold.at(other));
      if (score > own_score || (score == own_score && other < c)) ++rank;
    }
    ranks.push_back(rank);
  }

  std::map<int, Scalar> accuracy;
  for (const int n : top_ns) {
    if (n <= 0) throw InputError("top_n_retrieval: N must be positive");
    const auto hits = std::count_if(ranks.begin(), ranks.end(),
                                    [n](Index r) { return r <= static_cast<Index>(n); });
    accuracy[n] = Scalar(100) * static_cast<Scalar>(hits) / static_cast<Scalar>(ranks.size());
  }
  return accuracy;
}

Scalar top_k_overlap(const FeatureRanker& ranker, const PropertyNorms& norms,
                     const std::vector<Index>& concepts) {
  if (concepts.empty()) throw InputError("top_k_overlap: no concepts to evaluate");
  const auto gold = gold_feature_sets(norms);

  Scalar total = 0;
  for (const Index c : concepts) {
    const auto& gold_features = gold[static_cast<std::size_t>(c)];
    if (gold_features.empty())
      throw InputError("top_k_overlap: concept '" + norms.concepts.at(c) +
                       "' has no gold features");
    const std::size_t k = gold_features.size();

    const std::vector<Index> ranked = ranker(c);
    if (ranked.size() < k)
      throw Error("top_k_overlap: ranker returned " + std::to_string(ranked.size()) +
                  " features, need " + std::to_string(k));

    Index hits = 0;
    for (std::size_t i = 0; i < k; ++i)
      if (std::binary_search(gold_features.begin(), gold_features.end(), ranked[i])) ++hits;
    total += Scalar(100) * static_cast<Scalar>(hits) / static_cast<Scalar>(k);
  }
  return total / static_cast<Scalar>(concepts.size());
}

std::vector<QualitativeEntry> qualitative_table(const EmbeddingMatrix& words,
                                                const std::vector<std::string>& query_words,
                                                Index top_k, const PropertyNorms* norms,
                                                const Vocabulary& features,
                                                const WordRanker& rank) {
  if (query_words.empty()) throw InputError("qualitative_table: empty word list");

  std::vector<QualitativeEntry> entries;
  for (const std::string& raw : query_words) {
    QualitativeEntry entry;
    entry.word = to_lower(raw);

    const auto row = words.vocab.find(entry.word);
    if (!row) {
      entry.error = "not in embedding lexicon";
      entries.push_back(std::move(entry));
      continue;
    }

    // Gold features of the concept with the same label, when norms are given.
    // Matched by name: the norms may index features differently than the model.
    std::vector<Index> gold;
    if (norms != nullptr) {
      if (const auto concept_id = norms->concepts.find(entry.word)) {
        for (const NormTriple& t : norms->triples) {
          if (t.concept_id != *concept_id) continue;
          if (const auto f = features.find(norms->features.at(t.feature)))
            gold.push_back(*f);
        }
        std::sort(gold.begin(), gold.end());
      }
    }

    for (const RankedFeature& rf : rank(words.row(*row).transpose(), top_k)) {
      QualitativeRow qrow;
      qrow.feature = features.at(rf.feature);
      qrow.score = rf.score;
      qrow.in_gold = std::binary_search(gold.begin(), gold.end(), rf.feature);
      entry.rows.push_back(std::move(qrow));
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::vector<QualitativeEntry> qualitative_table(const F2VModel& model,
                                                const EmbeddingMatrix& words,
                                                const std::vector<std::string>& query_words,
                                                Index top_k, const PropertyNorms* norms) {
  const WordRanker ranker = [&model](Eigen::Ref<const Vector> vec, Index k) {
    return rank_features_for_word(model, vec, k);
  };
  return qualitative_table(words, query_words, top_k, norms, model.features, ranker);
}

EvalReport evaluate_f2v(const F2VModel& model, const EmbeddingMatrix& words,
                        const PropertyNorms& norms, const std::vector<Index>& concept_rows,
                        const DataSplit& split, const EvalOptions& options) {
  EvalReport report;
  report.method = "f2v";
  report.split_seed = split.seed;

  // Retrieval: composed concept vectors vs. the pretrained word space.
  std::map<Index, Vector> predicted;
  for (const Index c : split.test_concepts)
    predicted.emplace(c, compose_from_norms(model, norms, c, options.weighted_compose));

  const std::vector<Index> pool =
      options.pool_test_only ? split.test_concepts : all_concepts(norms);
  if (!predicted.empty()) {
    const auto gold = gold_word_vectors(words, concept_rows, pool);
    report.retrieval = top_n_retrieval(predicted, gold, pool, options.retrieval_ns);
  }

  // Feature overlap: cosine ranking of all features against the word vector.
  const FeatureRanker ranker = [&](Index c) {
    const auto ranked = rank_features_for_word(
        model, words.row(concept_rows[static_cast<std::size_t>(c)]).transpose(),
        model.features.size());
    std::vector<Index> ids(ranked.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) ids[i] = ranked[i].feature;
    return ids;
  };
  report.overlap_train = top_k_overlap(ranker, norms, split.train_concepts);
  if (!split.test_concepts.empty())
    report.overlap_test = top_k_overlap(ranker, norms, split.test_concepts);
  return report;
}

EvalReport evaluate_plsr(const PlsrModel& model, const EmbeddingMatrix& words,
                         const PropertyNorms& norms, const std::vector<Index>& concept_rows,
                         const DataSplit& split, const EvalOptions& options) {
  EvalReport report;
  report.method = "plsr";
  report.split_seed = split.seed;

  const auto predict_for = [&](Index c) {
    return predict(model, words.row(concept_rows[static_cast<std::size_t>(c)]).transpose());
  };

  // Retrieval in feature space: predicted vs. gold production-frequency rows.
  const std::vector<Index> pool =
      options.pool_test_only ? split.test_concepts : all_concepts(norms);
  const Matrix gold_rows = production_frequency_matrix(norms, pool);
  std::map<Index, Vector> gold;
  for (std::size_t i = 0; i < pool.size(); ++i)
    gold.emplace(pool[i], gold_rows.row(static_cast<Index>(i)).transpose());

  std::map<Index, Vector> predicted;
  for (const Index c : split.test_concepts) predicted.emplace(c, predict_for(c));
  if (!predicted.empty())
    report.retrieval = top_n_retrieval(predicted, gold, pool, options.retrieval_ns);

  const FeatureRanker ranker = [&](Index c) {
    return top_k_features_from_prediction(predict_for(c), norms.features.size());
  };
  report.overlap_train = top_k_overlap(ranker, norms, split.train_concepts);
  if (!split.test_concepts.empty())
    report.overlap_test = top_k_overlap(ranker, norms, split.test_concepts);
  return report;
}

std::string render_table(const EvalReport& report) {
  std::ostringstream out;
  out << "method " << report.method << "  dataset " << report.dataset << "  split-seed "
      << report.split_seed << "\n";

  out << "retrieval accuracy (test concepts, percent)\n ";
  for (const auto& [n, acc] : report.retrieval) {
    (void)acc;
    out << " Top " << n << '\t';
  }
  out << "\n ";
  for (const auto& [n, acc] : report.retrieval) {
    (void)n;
    out << " " << format_percent(acc) << '\t';
  }
  out << "\n";

  out << "top-K feature overlap (percent)\n";
  out << "  Train\tTest\n";
  out << "  " << format_percent(report.overlap_train) << '\t'
      << format_percent(report.overlap_test) << "\n";

  out << "parameters\n";
  for (const auto& [key, value] : report.parameters)
    out << "  " << key << " = " << value << "\n";
  return out.str();
}

std::string render_json(const EvalReport& report) {
  nlohmann::json doc;
  doc["method"] = report.method;
  doc["dataset"] = report.dataset;
  doc["split_seed"] = report.split_seed;
  nlohmann::json retrieval = nlohmann::json::object();
  for (const auto& [n, acc] : report.retrieval) retrieval[std::to_string(n)] = acc;
  doc["retrieval"] = retrieval;
  doc["overlap_train"] = report.overlap_train;
  doc["overlap_test"] = report.overlap_test;
  doc["parameters"] = report.parameters;
  return doc.dump(2) + "\n";
}

}  // namespace f2v
