#include "f2v/store.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace f2v {
namespace {

constexpr char kMagic[] = "f2v-archive";

std::string format_uint(std::uint64_t v) { return std::to_string(v); }

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const std::string& name) {
  if (!m.allFinite()) throw Error("archive: non-finite values in " + name);
}

class ArchiveWriter {
 public:
  explicit ArchiveWriter(const std::filesystem::path& path)
      : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw InputError("cannot write file: " + path.string());
  }

  void line(const std::string& text) { out_ << text << '\n'; }

  void kv_block(const std::string& name, const std::map<std::string, std::string>& kv) {
    line("kv " + name + " " + std::to_string(kv.size()));
    for (const auto& [key, value] : kv) {
      if (key.find_first_of(" \n") != std::string::npos ||
          value.find('\n') != std::string::npos)
        throw Error("archive: run config keys must be space-free, values newline-free");
      line(key + " " + value);
    }
  }

  void vocab_block(const std::string& name, const Vocabulary& vocab) {
    line("vocab " + name + " " + std::to_string(vocab.size()));
    for (const std::string& entry : vocab.entries()) line(entry);
  }

  void index_block(const std::string& name, const std::vector<Index>& values) {
    std::ostringstream row;
    for (std::size_t i = 0; i < values.size(); ++i)
      row << (i == 0 ? "" : " ") << values[i];
    line("ints " + name + " " + std::to_string(values.size()));
    line(row.str());
  }

  void vector_block(const std::string& name, const Vector& v) {
    require_finite(v, name);
    std::ostringstream row;
    for (Index i = 0; i < v.size(); ++i)
      row << (i == 0 ? "" : " ") << format_scalar(v[i]);
    line("vector " + name + " " + std::to_string(v.size()));
    line(row.str());
  }

  void matrix_block(const std::string& name, const Matrix& m) {
    require_finite(m, name);
    line("matrix " + name + " " + std::to_string(m.rows()) + " " + std::to_string(m.cols()));
    for (Index i = 0; i < m.rows(); ++i) {
      std::ostringstream row;
      for (Index j = 0; j < m.cols(); ++j)
        row << (j == 0 ? "" : " ") << format_scalar(m(i, j));
      line(row.str());
    }
  }

  void finish() {
    line("end");
    out_.flush();
    if (!out_) throw InputError("write failed: " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class ArchiveReader {
 public:
  explicit ArchiveReader(const std::filesystem::path& path) : path_(path), in_(path) {
    if (!in_) throw InputError("cannot open file: " + path.string());
  }

  std::string next_line(const std::string& block) {
    std::string line;
    if (!std::getline(in_, line))
      throw InputError(path_.string() + ": unexpected end of file in " + block);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  // Reads a `tag name count...` header line and returns the fields after
  // checking the tag and name.
  std::vector<std::string> header(const std::string& tag, const std::string& name) {
    const std::string line = next_line(tag + " " + name);
    std::istringstream fields(line);
    std::string got_tag, got_name;
    fields >> got_tag >> got_name;
    if (got_tag != tag || got_name != name)
      throw InputError(path_.string() + ": expected `" + tag + " " + name + "`, got `" + line +
                       "`");
    std::vector<std::string> rest;
    std::string token;
    while (fields >> token) rest.push_back(token);
    return rest;
  }

  std::int64_t count_from(const std::vector<std::string>& fields, const std::string& block,
                          std::size_t at = 0) {
    if (fields.size() <= at)
      throw InputError(path_.string() + ": missing count in " + block);
    return parse_int(fields[at], block);
  }

  std::int64_t parse_int(const std::string& token, const std::string& block) {
    std::int64_t value = 0;
    const auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || p != token.data() + token.size())
      throw InputError(path_.string() + ": bad integer '" + token + "' in " + block);
    return value;
  }

  std::uint64_t parse_uint(const std::string& token, const std::string& block) {
    std::uint64_t value = 0;
    const auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || p != token.data() + token.size())
      throw InputError(path_.string() + ": bad integer '" + token + "' in " + block);
    return value;
  }

  Scalar parse_scalar(std::string_view token, const std::string& block) {
    Scalar value = 0;
    const auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || p != token.data() + token.size())
      throw InputError(path_.string() + ": bad number '" + std::string(token) + "' in " +
                       block);
    return value;
  }

  std::map<std::string, std::string> kv_block(const std::string& name) {
    const auto n = count_from(header("kv", name), name);
    std::map<std::string, std::string> kv;
    for (std::int64_t i = 0; i < n; ++i) {
      const std::string line = next_line("kv " + name);
      const std::size_t sep = line.find(' ');
      if (sep == std::string::npos)
        throw InputError(path_.string() + ": bad kv line in " + name);
      kv[line.substr(0, sep)] = line.substr(sep + 1);
    }
    return kv;
  }

  Vocabulary vocab_block(const std::string& name) {
    const auto n = count_from(header("vocab", name), name);
    Vocabulary vocab;
    for (std::int64_t i = 0; i < n; ++i) vocab.add_unique(next_line("vocab " + name));
    return vocab;
  }

  std::vector<Index> index_block(const std::string& name) {
    const auto n = count_from(header("ints", name), name);
    const std::string row = next_line("ints " + name);
    std::istringstream fields(row);
    std::vector<Index> values;
    std::string token;
    while (fields >> token)
      values.push_back(static_cast<Index>(parse_int(token, "ints " + name)));
    if (static_cast<std::int64_t>(values.size()) != n)
      throw InputError(path_.string() + ": ints " + name + " declares " + std::to_string(n) +
                       " values, found " + std::to_string(values.size()));
    return values;
  }

  Vector vector_block(const std::string& name) {
    const auto n = count_from(header("vector", name), name);
    const std::string row = next_line("vector " + name);
    Vector v(n);
    Index filled = 0;
    std::istringstream fields(row);
    std::string token;
    while (fields >> token) {
      if (filled >= n) ++filled;  // count the overflow, error below
      else v[filled++] = parse_scalar(token, "vector " + name);
    }
    if (filled != n)
      throw InputError(path_.string() + ": vector " + name + " declares " + std::to_string(n) +
                       " values, found " + std::to_string(filled));
    return v;
  }

  Matrix matrix_block(const std::string& name) {
    const auto fields = header("matrix", name);
    const auto rows = count_from(fields, "matrix " + name, 0);
    const auto cols = count_from(fields, "matrix " + name, 1);
    if (rows < 0 || cols < 0)
      throw InputError(path_.string() + ": negative shape in matrix " + name);
    Matrix m(rows, cols);
    for (std::int64_t i = 0; i < rows; ++i) {
      const std::string row = next_line("matrix " + name);
      std::istringstream tokens(row);
      std::string token;
      Index filled = 0;
      while (tokens >> token) {
        if (filled >= cols)
          throw InputError(path_.string() + ": too many values in row " + std::to_string(i) +
                           " of matrix " + name);
        m(i, filled++) = parse_scalar(token, "matrix " + name);
      }
      if (filled != cols)
        throw InputError(path_.string() + ": row " + std::to_string(i) + " of matrix " + name +
                         " has " + std::to_string(filled) + " values, expected " +
                         std::to_string(cols));
    }
    return m;
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
};

std::map<std::string, std::string> f2v_config_kv(const F2VConfig& c) {
  return {
      {"dim", std::to_string(c.dim)},
      {"learning_rate", format_scalar(c.learning_rate)},
      {"epochs", std::to_string(c.epochs)},
      {"negative_rate", std::to_string(c.negative_rate)},
      {"batch_size", std::to_string(c.batch_size)},
      {"adam_beta1", format_scalar(c.adam_beta1)},
      {"adam_beta2", format_scalar(c.adam_beta2)},
      {"adam_epsilon", format_scalar(c.adam_epsilon)},
      {"init_scale", format_scalar(c.init_scale)},
      {"seed", format_uint(c.seed)},
  };
}

F2VConfig f2v_config_from_kv(ArchiveReader& reader,
                             const std::map<std::string, std::string>& kv) {
  const auto get = [&kv, &reader](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end())
      throw InputError(reader.path().string() + ": config is missing key '" + key + "'");
    return it->second;
  };
  F2VConfig c;
  c.dim = reader.parse_int(get("dim"), "config");
  c.learning_rate = reader.parse_scalar(get("learning_rate"), "config");
  c.epochs = static_cast<int>(reader.parse_int(get("epochs"), "config"));
  c.negative_rate = static_cast<int>(reader.parse_int(get("negative_rate"), "config"));
  c.batch_size = static_cast<int>(reader.parse_int(get("batch_size"), "config"));
  c.adam_beta1 = reader.parse_scalar(get("adam_beta1"), "config");
  c.adam_beta2 = reader.parse_scalar(get("adam_beta2"), "config");
  c.adam_epsilon = reader.parse_scalar(get("adam_epsilon"), "config");
  c.init_scale = reader.parse_scalar(get("init_scale"), "config");
  c.seed = reader.parse_uint(get("seed"), "config");
  return c;
}

void check_split(const ModelArchive& archive) {
  const Index n = archive.concepts.size();
  for (const Index c : archive.split.train_concepts)
    if (c < 0 || c >= n) throw InputError("archive: train split index out of range");
  for (const Index c : archive.split.test_concepts)
    if (c < 0 || c >= n) throw InputError("archive: test split index out of range");
}

}  // namespace

std::string format_scalar(Scalar value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void save_model(const ModelArchive& archive, const std::filesystem::path& path) {
  if (archive.kind != "f2v" && archive.kind != "plsr")
    throw Error("archive: unknown kind '" + archive.kind + "'");
  if ((archive.kind == "f2v") != archive.f2v.has_value() ||
      (archive.kind == "plsr") != archive.plsr.has_value())
    throw Error("archive: kind does not match the stored model");

  ArchiveWriter w(path);
  w.line(std::string(kMagic) + " " + std::to_string(archive.format_version));
  w.line("kind " + archive.kind);
  w.kv_block("run", archive.run_config);
  w.vocab_block("concepts", archive.concepts);
  w.vocab_block("features", archive.features);
  w.line("uint split_seed " + format_uint(archive.split.seed));
  w.index_block("train_concepts", archive.split.train_concepts);
  w.index_block("test_concepts", archive.split.test_concepts);

  if (archive.kind == "f2v") {
    const F2VModel& model = *archive.f2v;
    if (!(model.features == archive.features))
      throw Error("archive: feature vocabulary does not match the model");
    w.kv_block("config", f2v_config_kv(model.config));
    w.line("int adam_step " + std::to_string(model.adam.step));
    w.matrix_block("feature_embeddings", model.feature_embeddings);
    w.matrix_block("adam_first_moment", model.adam.first_moment);
    w.matrix_block("adam_second_moment", model.adam.second_moment);
  } else {
    const PlsrModel& model = *archive.plsr;
    w.kv_block("config", {{"components", std::to_string(model.components)}});
    w.vector_block("x_mean", model.x_mean);
    w.vector_block("y_mean", model.y_mean);
    w.matrix_block("x_weights", model.x_weights);
    w.matrix_block("x_loadings", model.x_loadings);
    w.matrix_block("y_loadings", model.y_loadings);
    w.matrix_block("coefficients", model.coefficients);
  }
  w.finish();
}

ModelArchive load_model(const std::filesystem::path& path) {
  ArchiveReader r(path);

  const std::string magic_line = r.next_line("header");
  std::istringstream magic(magic_line);
  std::string tag;
  int version = -1;
  magic >> tag >> version;
  if (tag != kMagic)
    throw InputError(path.string() + ": not a model archive");
  if (version != kArchiveVersion)
    throw InputError(path.string() + ": unsupported archive version " +
                     std::to_string(version) + " (supported: " +
                     std::to_string(kArchiveVersion) + ")");

  ModelArchive archive;
  archive.format_version = version;

  const std::string kind_line = r.next_line("kind");
  if (kind_line.rfind("kind ", 0) != 0)
    throw InputError(path.string() + ": expected `kind`, got `" + kind_line + "`");
  archive.kind = kind_line.substr(5);
  if (archive.kind != "f2v" && archive.kind != "plsr")
    throw InputError(path.string() + ": unknown model kind '" + archive.kind + "'");

  archive.run_config = r.kv_block("run");
  archive.concepts = r.vocab_block("concepts");
  archive.features = r.vocab_block("features");
  {
    const auto fields = r.header("uint", "split_seed");
    if (fields.empty()) throw InputError(path.string() + ": missing split_seed value");
    archive.split.seed = r.parse_uint(fields[0], "split_seed");
  }
  archive.split.train_concepts = r.index_block("train_concepts");
  archive.split.test_concepts = r.index_block("test_concepts");
  check_split(archive);

  if (archive.kind == "f2v") {
    F2VModel model;
    model.features = archive.features;
    model.config = f2v_config_from_kv(r, r.kv_block("config"));
    {
      const auto fields = r.header("int", "adam_step");
      if (fields.empty()) throw InputError(path.string() + ": missing adam_step value");
      model.adam.step = r.parse_int(fields[0], "adam_step");
    }
    model.feature_embeddings = r.matrix_block("feature_embeddings");
    model.adam.first_moment = r.matrix_block("adam_first_moment");
    model.adam.second_moment = r.matrix_block("adam_second_moment");

    if (model.feature_embeddings.rows() != archive.features.size() ||
        model.feature_embeddings.cols() != model.config.dim)
      throw InputError(path.string() + ": feature_embeddings shape does not match " +
                       "the feature vocabulary and configured dim");
    if (model.adam.first_moment.rows() != model.feature_embeddings.rows() ||
        model.adam.first_moment.cols() != model.feature_embeddings.cols() ||
        model.adam.second_moment.rows() != model.feature_embeddings.rows() ||
        model.adam.second_moment.cols() != model.feature_embeddings.cols())
      throw InputError(path.string() + ": adam moment shapes do not match the embeddings");
    if (model.adam.step < 0)
      throw InputError(path.string() + ": negative adam_step");
    archive.f2v = std::move(model);
  } else {
    PlsrModel model;
    const auto kv = r.kv_block("config");
    const auto it = kv.find("components");
    if (it == kv.end()) throw InputError(path.string() + ": config is missing 'components'");
    model.components = r.parse_int(it->second, "config");
    model.x_mean = r.vector_block("x_mean");
    model.y_mean = r.vector_block("y_mean");
    model.x_weights = r.matrix_block("x_weights");
    model.x_loadings = r.matrix_block("x_loadings");
    model.y_loadings = r.matrix_block("y_loadings");
    model.coefficients = r.matrix_block("coefficients");

    const Index m = model.x_mean.size();
    const Index k = model.y_mean.size();
    const Index p = model.components;
    if (model.x_weights.rows() != m || model.x_weights.cols() != p ||
        model.x_loadings.rows() != m || model.x_loadings.cols() != p ||
        model.y_loadings.rows() != k || model.y_loadings.cols() != p ||
        model.coefficients.rows() != m || model.coefficients.cols() != k)
      throw InputError(path.string() + ": inconsistent plsr matrix shapes");
    if (archive.features.size() != k)
      throw InputError(path.string() + ": y_mean length does not match the feature vocabulary");
    archive.plsr = std::move(model);
  }

  const std::string terminator = r.next_line("end");
  if (terminator != "end")
    throw InputError(path.string() + ": expected `end`, got `" + terminator + "`");
  return archive;
}

}  // namespace f2v
