#include "f2v/corpus.hpp"

#include "f2v/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <utility>

namespace f2v {
namespace {

void emit_warning(const WarnFn& warn, const std::string& message) {
  if (warn)
    warn(message);
  else
    std::cerr << "warning: " << message << "\n";
}

std::ifstream open_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path.string());
  return in;
}

// getline that tolerates CRLF input.
bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

Scalar parse_scalar(std::string_view token, const std::filesystem::path& path, long line_no) {
  Scalar value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size())
    throw InputError(path.string() + ":" + std::to_string(line_no) +
                     ": non-numeric token '" + std::string(token) + "'");
  return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (start <= line.size()) {
    const std::size_t end = line.find(sep, start);
    if (end == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, end - start));
    start = end + 1;
  }
  return fields;
}

}  // namespace

EmbeddingMatrix parse_embedding_file(const std::filesystem::path& path,
                                     std::optional<Index> expected_dim, const WarnFn& warn) {
  std::ifstream in = open_text_file(path);

  Vocabulary vocab;
  std::vector<std::vector<Scalar>> rows;
  Index dim = -1;
  std::string line;
  long line_no = 0;
  long duplicates = 0;

  while (next_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;

    const std::size_t word_end = line.find(' ');
    if (word_end == std::string::npos)
      throw InputError(path.string() + ":" + std::to_string(line_no) +
                       ": expected `word v1 ... vd`");
    std::string word = to_lower(line.substr(0, word_end));
    validate_token(word, path.string() + ":" + std::to_string(line_no));

    std::vector<Scalar> values;
    for (std::string_view token : split(std::string_view(line).substr(word_end + 1), ' ')) {
      if (token.empty()) continue;  // tolerate stray double spaces
      values.push_back(parse_scalar(token, path, line_no));
    }
    if (values.empty())
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": no vector values");

    if (dim < 0) {
      dim = static_cast<Index>(values.size());
      if (expected_dim && dim != *expected_dim)
        throw InputError(path.string() + ": dimension mismatch: file has " +
                         std::to_string(dim) + ", expected " + std::to_string(*expected_dim));
    } else if (static_cast<Index>(values.size()) != dim) {
      throw InputError(path.string() + ":" + std::to_string(line_no) +
                       ": inconsistent dimension " + std::to_string(values.size()) +
                       " (file uses " + std::to_string(dim) + ")");
    }

    for (const Scalar v : values)
      if (!std::isfinite(v))
        throw InputError(path.string() + ":" + std::to_string(line_no) + ": non-finite value");

    if (vocab.contains(word)) {
      ++duplicates;
      continue;  // first occurrence wins
    }
    vocab.add_unique(std::move(word));
    rows.push_back(std::move(values));
  }

  if (rows.empty()) throw InputError(path.string() + ": empty embedding file");
  if (duplicates > 0)
    emit_warning(warn, path.string() + ": " + std::to_string(duplicates) +
                           " duplicate word(s) ignored (first occurrence kept)");

  EmbeddingMatrix result;
  result.vocab = std::move(vocab);
  result.vectors.resize(static_cast<Index>(rows.size()), dim);
  for (Index i = 0; i < result.vectors.rows(); ++i)
    for (Index j = 0; j < dim; ++j)
      result.vectors(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return result;
}

PropertyNorms parse_norms_file(const std::filesystem::path& path, const WarnFn& warn) {
  std::ifstream in = open_text_file(path);

  std::string line;
  if (!next_line(in, line) || line != "concept\tfeature\tpf")
    throw InputError(path.string() + ": missing header `concept<TAB>feature<TAB>pf`");

  PropertyNorms norms;
  std::set<std::pair<Index, Index>> seen;
  long line_no = 1;
  long low_pf_rows = 0;

  while (next_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;

    const auto fields = split(line, '\t');
    if (fields.size() != 3)
      throw InputError(path.string() + ":" + std::to_string(line_no) +
                       ": expected 3 tab-separated fields, got " +
                       std::to_string(fields.size()));

    std::string concept_name = to_lower(std::string(fields[0]));
    std::string feature_name = to_lower(std::string(fields[1]));
    validate_token(concept_name, path.string() + ":" + std::to_string(line_no));
    validate_token(feature_name, path.string() + ":" + std::to_string(line_no));

    int pf = 0;
    const auto [ptr, ec] = std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), pf);
    if (ec != std::errc() || ptr != fields[2].data() + fields[2].size() || pf <= 0)
      throw InputError(path.string() + ":" + std::to_string(line_no) +
                       ": pf must be a positive integer, got '" + std::string(fields[2]) + "'");
    if (pf < 5) ++low_pf_rows;

    const Index c = norms.concepts.get_or_add(std::move(concept_name));
    const Index f = norms.features.get_or_add(std::move(feature_name));
    if (!seen.emplace(c, f).second)
      throw InputError(path.string() + ":" + std::to_string(line_no) +
                       ": duplicate (concept, feature) pair");
    norms.triples.push_back({c, f, pf});
  }

  if (norms.triples.empty()) throw InputError(path.string() + ": no norm rows");
  if (low_pf_rows > 0)
    emit_warning(warn, path.string() + ": " + std::to_string(low_pf_rows) +
                           " row(s) with pf < 5 (elicitation norms keep pf >= 5)");
  return norms;
}

void write_norms_file(const PropertyNorms& norms, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // binary: no newline translation
  if (!out) throw InputError("cannot write file: " + path.string());
  out << "concept\tfeature\tpf\n";
  for (const NormTriple& t : norms.triples)
    out << norms.concepts.at(t.concept_id) << '\t' << norms.features.at(t.feature) << '\t'
        << t.production_frequency << '\n';
  if (!out) throw InputError("write failed: " + path.string());
}

AliasMap parse_alias_file(const std::filesystem::path& path) {
  std::ifstream in = open_text_file(path);
  AliasMap aliases;
  std::string line;
  long line_no = 0;
  while (next_line(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 2)
      throw InputError(path.string() + ":" + std::to_string(line_no) +
                       ": expected `concept<TAB>word`");
    aliases[to_lower(std::string(fields[0]))] = to_lower(std::string(fields[1]));
  }
  return aliases;
}

AlignResult align(const PropertyNorms& norms, const EmbeddingMatrix& embeddings,
                  const AliasMap& aliases) {
  const Index n_concepts = norms.concepts.size();

  // Embedding row per original concept, or -1 when absent from the lexicon.
  std::vector<Index> row_of(static_cast<std::size_t>(n_concepts), -1);
  AlignResult result;
  for (Index c = 0; c < n_concepts; ++c) {
    const std::string& label = norms.concepts.at(c);
    const auto alias = aliases.find(label);
    const std::string& word = alias == aliases.end() ? label : alias->second;
    if (const auto row = embeddings.vocab.find(word))
      row_of[static_cast<std::size_t>(c)] = *row;
    else
      result.dropped.push_back(label);
  }

  if (result.dropped.size() == static_cast<std::size_t>(n_concepts))
    throw InputError("align: no concept has a word vector; nothing to train on");

  // Rebuild both vocabularies in first-appearance order of the surviving
  // triples, so the result obeys the same ordering contract as a parsed file.
  for (const NormTriple& t : norms.triples) {
    const Index row = row_of[static_cast<std::size_t>(t.concept_id)];
    if (row < 0) continue;
    const Index c = result.norms.concepts.get_or_add(norms.concepts.at(t.concept_id));
    const Index f = result.norms.features.get_or_add(norms.features.at(t.feature));
    if (static_cast<std::size_t>(c) == result.concept_rows.size())
      result.concept_rows.push_back(row);
    result.norms.triples.push_back({c, f, t.production_frequency});
  }
  return result;
}

DataSplit make_split(const PropertyNorms& norms, Index n_train, std::uint64_t seed) {
  const Index n = norms.concepts.size();
  if (n_train <= 0 || n_train >= n)
    throw InputError("make_split: n_train must be in (0, " + std::to_string(n) + "), got " +
                     std::to_string(n_train));

  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  rng.shuffle(order);

  DataSplit split;
  split.seed = seed;
  split.train_concepts.assign(order.begin(), order.begin() + n_train);
  split.test_concepts.assign(order.begin() + n_train, order.end());
  std::sort(split.train_concepts.begin(), split.train_concepts.end());
  std::sort(split.test_concepts.begin(), split.test_concepts.end());
  return split;
}

std::vector<std::vector<Index>> gold_feature_sets(const PropertyNorms& norms) {
  std::vector<std::vector<Index>> gold(static_cast<std::size_t>(norms.concepts.size()));
  for (const NormTriple& t : norms.triples)
    gold[static_cast<std::size_t>(t.concept_id)].push_back(t.feature);
  for (auto& features : gold) std::sort(features.begin(), features.end());
  return gold;
}

Matrix production_frequency_matrix(const PropertyNorms& norms,
                                   const std::vector<Index>& concepts) {
  std::vector<Index> dense_row(static_cast<std::size_t>(norms.concepts.size()), -1);
  for (std::size_t i = 0; i < concepts.size(); ++i)
    dense_row[static_cast<std::size_t>(concepts[i])] = static_cast<Index>(i);

  Matrix out = Matrix::Zero(static_cast<Index>(concepts.size()), norms.features.size());
  for (const NormTriple& t : norms.triples) {
    const Index r = dense_row[static_cast<std::size_t>(t.concept_id)];
    if (r >= 0) out(r, t.feature) = static_cast<Scalar>(t.production_frequency);
  }
  return out;
}

}  // namespace f2v
