#pragma once

#include "f2v/corpus.hpp"
#include "f2v/feature2vec.hpp"
#include "f2v/plsr.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace f2v {

inline constexpr int kArchiveVersion = 1;

/// Self-describing text archive of one trained model together with the
/// aligned concept vocabulary, the recorded train/test split, and the
/// resolved run configuration (audit trail). Numbers are written with 17
/// significant decimal digits, so doubles round-trip bit-exactly and the
/// byte output is deterministic for a given model.
struct ModelArchive {
  int format_version = kArchiveVersion;
  std::string kind;  // "f2v" | "plsr"
  Vocabulary concepts;
  Vocabulary features;
  DataSplit split;
  std::map<std::string, std::string> run_config;

  // Exactly one of these holds a model, matching `kind`. A loaded f2v model
  // has no word_embeddings attached; callers re-attach the frozen matrix.
  std::optional<F2VModel> f2v;
  std::optional<PlsrModel> plsr;
};

void save_model(const ModelArchive& archive, const std::filesystem::path& path);

ModelArchive load_model(const std::filesystem::path& path);

/// %.17g rendering used across archives, traces, and reports.
std::string format_scalar(Scalar value);

}  // namespace f2v
