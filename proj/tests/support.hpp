// Shared fixtures and independent reference implementations ("oracles")
// used to cross-check the library. Everything here is deliberately naive:
// dense loops, textbook formulas, no reuse of the code under test.
#pragma once

#include "f2v/corpus.hpp"
#include "f2v/feature2vec.hpp"
#include "f2v/rng.hpp"
#include "f2v/types.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace testsupport {

using f2v::Index;
using f2v::Matrix;
using f2v::Scalar;
using f2v::Vector;

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto base = std::filesystem::temp_directory_path();
    path_ = base / ("f2v-test-" + std::to_string(::getpid()) + "-" +
                    std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

  std::filesystem::path write(const std::string& name, const std::string& content) const {
    const auto p = file(name);
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p;
  }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// ----------------------------------------------------------- fixtures ---

// Random embedding matrix with words w0..w{n-1}.
inline f2v::EmbeddingMatrix random_embeddings(Index n, Index dim, std::uint64_t seed,
                                              Scalar scale = 1.0) {
  f2v::EmbeddingMatrix emb;
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<Scalar> dist(-scale, scale);
  emb.vectors.resize(n, dim);
  for (Index i = 0; i < n; ++i) {
    emb.vocab.add_unique("w" + std::to_string(i));
    for (Index j = 0; j < dim; ++j) emb.vectors(i, j) = dist(gen);
  }
  return emb;
}

// Norms where concept wi lists features f{i%m}, f{(i+1)%m}, ... (per_concept
// many), pf = 5, 6, ... All concepts are named after embedding words, and all
// n_features features exist even if the cycle never reaches some of them.
inline f2v::PropertyNorms cyclic_norms(Index n_concepts, Index n_features, int per_concept) {
  f2v::PropertyNorms norms;
  for (Index f = 0; f < n_features; ++f) norms.features.add_unique("f" + std::to_string(f));
  for (Index c = 0; c < n_concepts; ++c) {
    const Index cid = norms.concepts.get_or_add("w" + std::to_string(c));
    for (int j = 0; j < per_concept; ++j) {
      const Index fid =
          norms.features.get_or_add("f" + std::to_string((c + j) % n_features));
      norms.triples.push_back({cid, fid, 5 + j});
    }
  }
  return norms;
}

inline std::vector<Index> identity_rows(Index n) {
  std::vector<Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Index(0));
  return rows;
}

// Split where every concept trains; useful when the fixture has no holdout.
inline f2v::DataSplit all_train_split(Index n_concepts, std::uint64_t seed) {
  f2v::DataSplit split;
  split.seed = seed;
  split.train_concepts = identity_rows(n_concepts);
  return split;
}

// ------------------------------------------------------------- oracles ---

// Central finite-difference gradient of the pair loss w.r.t. the feature row.
inline Vector finite_difference_grad(const f2v::F2VModel& model, const Vector& word_vec,
                                     Index feature, f2v::PairLabel label, Scalar h = 1e-6) {
  f2v::F2VModel probe = model;
  const Index dim = model.feature_embeddings.cols();
  Vector grad(dim);
  for (Index j = 0; j < dim; ++j) {
    probe.feature_embeddings = model.feature_embeddings;
    probe.feature_embeddings(feature, j) += h;
    const Scalar up = f2v::pair_loss_and_grad(probe, word_vec, feature, label).loss;
    probe.feature_embeddings(feature, j) = model.feature_embeddings(feature, j) - h;
    const Scalar down = f2v::pair_loss_and_grad(probe, word_vec, feature, label).loss;
    grad[j] = (up - down) / (2 * h);
  }
  return grad;
}

// Textbook Adam over a fixed parameter matrix: step t is global, but rows
// absent from a step's gradient keep their moments untouched (lazy variant,
// mirroring the contract of the code under test).
struct ReferenceAdam {
  Matrix params, m, v;
  std::int64_t t = 0;
  Scalar lr, beta1, beta2, eps;

  ReferenceAdam(const Matrix& initial, Scalar lr_, Scalar b1, Scalar b2, Scalar eps_)
      : params(initial),
        m(Matrix::Zero(initial.rows(), initial.cols())),
        v(Matrix::Zero(initial.rows(), initial.cols())),
        lr(lr_),
        beta1(b1),
        beta2(b2),
        eps(eps_) {}

  void step(const std::map<Index, Vector>& grads) {
    ++t;
    const Scalar c1 = 1 - std::pow(beta1, static_cast<Scalar>(t));
    const Scalar c2 = 1 - std::pow(beta2, static_cast<Scalar>(t));
    for (const auto& [row, g] : grads) {
      for (Index j = 0; j < params.cols(); ++j) {
        m(row, j) = beta1 * m(row, j) + (1 - beta1) * g[j];
        v(row, j) = beta2 * v(row, j) + (1 - beta2) * g[j] * g[j];
        const Scalar mhat = m(row, j) / c1;
        const Scalar vhat = v(row, j) / c2;
        params(row, j) -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }
};

// Brute-force top-N retrieval: explicitly sort the whole pool per concept
// (cosine descending, index ascending) and locate the gold identity.
inline std::map<int, Scalar> brute_force_retrieval(const std::map<Index, Vector>& predicted,
                                                   const std::map<Index, Vector>& gold,
                                                   const std::vector<Index>& pool,
                                                   const std::vector<int>& top_ns) {
  std::vector<Index> ranks;
  for (const auto& [c, prediction] : predicted) {
    std::vector<std::pair<Scalar, Index>> scored;
    for (const Index other : pool)
      scored.emplace_back(f2v::cosine_similarity(prediction, gold.at(other)), other);
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (std::size_t pos = 0; pos < scored.size(); ++pos)
      if (scored[pos].second == c) {
        ranks.push_back(static_cast<Index>(pos) + 1);
        break;
      }
  }
  std::map<int, Scalar> acc;
  for (const int n : top_ns) {
    Index hits = 0;
    for (const Index r : ranks)
      if (r <= n) ++hits;
    acc[n] = Scalar(100) * static_cast<Scalar>(hits) / static_cast<Scalar>(ranks.size());
  }
  return acc;
}

// Brute-force top-K overlap from explicit per-concept rankings.
inline Scalar brute_force_overlap(const std::vector<std::vector<Index>>& rankings,
                                  const f2v::PropertyNorms& norms,
                                  const std::vector<Index>& concepts) {
  Scalar total = 0;
  for (const Index c : concepts) {
    std::vector<Index> gold;
    for (const auto& t : norms.triples)
      if (t.concept_id == c) gold.push_back(t.feature);
    const std::size_t k = gold.size();
    Index hits = 0;
    for (std::size_t i = 0; i < k; ++i)
      if (std::find(gold.begin(), gold.end(), rankings[static_cast<std::size_t>(c)][i]) !=
          gold.end())
        ++hits;
    total += Scalar(100) * static_cast<Scalar>(hits) / static_cast<Scalar>(k);
  }
  return total / static_cast<Scalar>(concepts.size());
}

// Ordinary least squares with intercept via QR; reference for regression
// exactness on full-rank noiseless data.
inline Matrix ols_with_intercept(const Matrix& X, const Matrix& Y) {
  Matrix design(X.rows(), X.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(X.cols()) = X;
  return design.colPivHouseholderQr().solve(Y);  // (m+1) x k
}

inline Matrix ols_predict(const Matrix& coeffs, const Matrix& X) {
  Matrix design(X.rows(), X.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(X.cols()) = X;
  return design * coeffs;
}

// Full argsort of a score vector, descending with ties by ascending index.
inline std::vector<Index> argsort_desc(const Vector& scores) {
  std::vector<Index> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace testsupport
