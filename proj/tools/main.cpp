// Command-line front end: train feature embeddings or the regression
// baseline, evaluate trained models, and rank features for query words.
//
// Exit codes: 0 success, 1 internal error, 2 usage or input error.

#include "f2v/corpus.hpp"
#include "f2v/eval.hpp"
#include "f2v/feature2vec.hpp"
#include "f2v/plsr.hpp"
#include "f2v/store.hpp"
#include "f2v/types.hpp"
#include "f2v/vocab.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace f2v;

void warn_to_stderr(const std::string& message) {
  std::cerr << "f2v: warning: " << message << "\n";
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << content;
  if (!out) throw Error("failed while writing " + path);
}

// stdout when path is empty, otherwise the file (created or truncated).
void emit(const std::string& path, const std::string& content) {
  if (path.empty())
    std::cout << content;
  else
    write_text_file(path, content);
}

std::string dataset_label_from(const std::string& requested, const std::string& norms_path) {
  if (!requested.empty()) return requested;
  return std::filesystem::path(norms_path).stem().string();
}

std::string join_ints(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(values[i]);
  }
  return out;
}

struct LoadedData {
  EmbeddingMatrix words;
  AlignResult aligned;
};

LoadedData load_and_align(const std::string& embeddings_path, const std::string& norms_path,
                          const std::string& alias_path, std::optional<Index> expected_dim) {
  LoadedData data;
  data.words = parse_embedding_file(embeddings_path, expected_dim, warn_to_stderr);
  const PropertyNorms raw = parse_norms_file(norms_path, warn_to_stderr);
  AliasMap aliases;
  if (!alias_path.empty()) aliases = parse_alias_file(alias_path);
  data.aligned = align(raw, data.words, aliases);
  return data;
}

// ---------------------------------------------------------------- train ---

struct TrainArgs {
  std::string embeddings;
  std::string norms;
  std::string alias;
  std::string out;
  std::string loss_trace;
  std::string report;  // dropped-concept report; stderr when empty
  std::string dataset;
  std::string method;
  std::uint64_t seed = 42;
  Index n_train = 0;

  Scalar lr = 1e-3;
  int epochs = 120;
  int neg_rate = 20;
  int batch_size = 128;
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar eps = 1e-8;
  Scalar init_scale = 0;  // 0 -> 0.5 / dim

  Index components = 50;
};

void report_dropped(const std::vector<std::string>& dropped, const std::string& path) {
  std::string lines;
  for (const std::string& name : dropped) lines += "DROPPED " + name + "\n";
  if (!path.empty())
    write_text_file(path, lines);
  else
    std::cerr << lines;
}

std::map<std::string, std::string> common_run_config(const TrainArgs& args,
                                                     const std::string& dataset) {
  std::map<std::string, std::string> cfg;
  cfg["subcommand"] = "train";
  cfg["method"] = args.method;
  cfg["dataset"] = dataset;
  cfg["embeddings"] = args.embeddings;
  cfg["norms"] = args.norms;
  if (!args.alias.empty()) cfg["alias"] = args.alias;
  cfg["seed"] = std::to_string(args.seed);
  cfg["n_train"] = std::to_string(args.n_train);
  return cfg;
}

int run_train(const TrainArgs& args) {
  LoadedData data = load_and_align(args.embeddings, args.norms, args.alias, std::nullopt);
  PropertyNorms& norms = data.aligned.norms;
  report_dropped(data.aligned.dropped, args.report);

  const DataSplit split = make_split(norms, args.n_train, args.seed);
  const std::string dataset = dataset_label_from(args.dataset, args.norms);

  ModelArchive archive;
  archive.kind = args.method;
  archive.concepts = norms.concepts;
  archive.features = norms.features;
  archive.split = split;
  archive.run_config = common_run_config(args, dataset);

  std::ostringstream summary;
  summary << "trained " << args.method << " dataset=" << dataset
          << " concepts=" << norms.concepts.size() << " features=" << norms.features.size()
          << " dim=" << data.words.dim() << " train=" << split.train_concepts.size()
          << " test=" << split.test_concepts.size()
          << " dropped=" << data.aligned.dropped.size();

  if (args.method == "f2v") {
    F2VConfig config;
    config.dim = data.words.dim();
    config.learning_rate = args.lr;
    config.epochs = args.epochs;
    config.negative_rate = args.neg_rate;
    config.batch_size = args.batch_size;
    config.adam_beta1 = args.beta1;
    config.adam_beta2 = args.beta2;
    config.adam_epsilon = args.eps;
    config.init_scale = args.init_scale;
    config.seed = args.seed;
    config.validate();

    TrainResult result = train(norms, data.aligned.concept_rows, split, data.words, config);

    if (!args.loss_trace.empty()) {
      std::string trace = "# epoch mean_loss positive_loss negative_loss positives negatives\n";
      for (std::size_t e = 0; e < result.epochs.size(); ++e) {
        const EpochStats& s = result.epochs[e];
        trace += std::to_string(e + 1) + " " + format_scalar(s.mean_loss) + " " +
                 format_scalar(s.positive_loss) + " " + format_scalar(s.negative_loss) + " " +
                 std::to_string(s.positive_count) + " " + std::to_string(s.negative_count) +
                 "\n";
      }
      write_text_file(args.loss_trace, trace);
    }

    archive.run_config["lr"] = format_scalar(config.learning_rate);
    archive.run_config["epochs"] = std::to_string(config.epochs);
    archive.run_config["neg_rate"] = std::to_string(config.negative_rate);
    archive.run_config["batch_size"] = std::to_string(config.batch_size);
    archive.run_config["beta1"] = format_scalar(config.adam_beta1);
    archive.run_config["beta2"] = format_scalar(config.adam_beta2);
    archive.run_config["eps"] = format_scalar(config.adam_epsilon);
    archive.run_config["init_scale"] = format_scalar(config.effective_init_scale());
    archive.run_config["dim"] = std::to_string(config.dim);

    summary << " epochs=" << result.epochs.size();
    if (!result.epochs.empty())
      summary << " final_loss=" << format_scalar(result.epochs.back().mean_loss);
    archive.f2v = std::move(result.model);
    archive.f2v->word_embeddings = nullptr;  // frozen matrix is not archived
  } else {
    Matrix inputs(static_cast<Index>(split.train_concepts.size()), data.words.dim());
    for (std::size_t i = 0; i < split.train_concepts.size(); ++i) {
      const Index row = data.aligned.concept_rows[static_cast<std::size_t>(
          split.train_concepts[i])];
      inputs.row(static_cast<Index>(i)) = data.words.row(row);
    }
    const Matrix targets = production_frequency_matrix(norms, split.train_concepts);

    PlsrModel model = fit_plsr(inputs, targets, args.components);

    if (!args.loss_trace.empty()) {
      std::string trace = "# component inner_iterations\n";
      for (std::size_t c = 0; c < model.inner_iterations.size(); ++c)
        trace += std::to_string(c + 1) + " " + std::to_string(model.inner_iterations[c]) + "\n";
      write_text_file(args.loss_trace, trace);
    }

    Scalar rss = 0;
    for (Index i = 0; i < inputs.rows(); ++i) {
      const Vector prediction = predict(model, inputs.row(i).transpose());
      rss += (prediction.transpose() - targets.row(i)).squaredNorm();
    }

    archive.run_config["components"] = std::to_string(model.components);
    summary << " components=" << model.components << " train_rss=" << format_scalar(rss);
    archive.plsr = std::move(model);
  }

  save_model(archive, args.out);
  summary << " out=" << args.out << "\n";
  std::cout << summary.str();
  return 0;
}

// ------------------------------------------------------------- evaluate ---

struct EvalArgs {
  std::string model;
  std::string embeddings;
  std::string norms;
  std::string alias;
  std::string out;  // stdout when empty
  std::string dataset;
  std::string format = "table";
  std::string pool = "all";
  std::vector<int> top_ns = {1, 5, 10, 20};
  bool weighted = false;
  std::optional<std::uint64_t> seed;
};

void require_matching_vocab(const Vocabulary& archived, const Vocabulary& rebuilt,
                            const std::string& what) {
  if (archived == rebuilt) return;
  std::string detail;
  if (archived.size() != rebuilt.size()) {
    detail = "archive has " + std::to_string(archived.size()) + ", inputs give " +
             std::to_string(rebuilt.size());
  } else {
    for (Index i = 0; i < archived.size(); ++i) {
      if (archived.at(i) != rebuilt.at(i)) {
        detail = "entry " + std::to_string(i) + " is '" + archived.at(i) + "' in the archive but '" +
                 rebuilt.at(i) + "' in the inputs";
        break;
      }
    }
  }
  throw InputError("aligned " + what + " do not match the model archive (" + detail +
                   "); evaluate with the same embeddings, norms, and aliases used for training");
}

int run_evaluate(const EvalArgs& args) {
  ModelArchive archive = load_model(args.model);

  std::optional<Index> expected_dim;
  if (archive.kind == "f2v")
    expected_dim = archive.f2v->config.dim;
  else
    expected_dim = archive.plsr->x_mean.size();

  LoadedData data = load_and_align(args.embeddings, args.norms, args.alias, expected_dim);
  require_matching_vocab(archive.concepts, data.aligned.norms.concepts, "concepts");
  require_matching_vocab(archive.features, data.aligned.norms.features, "features");

  if (args.seed && *args.seed != archive.split.seed)
    warn_to_stderr("requested split seed " + std::to_string(*args.seed) +
                   " differs from the archive's " + std::to_string(archive.split.seed) +
                   "; evaluating with the archive's recorded split");

  EvalOptions options;
  options.retrieval_ns = args.top_ns;
  options.pool_test_only = (args.pool == "test");
  options.weighted_compose = args.weighted;

  EvalReport report;
  if (archive.kind == "f2v") {
    archive.f2v->word_embeddings = &data.words;
    report = evaluate_f2v(*archive.f2v, data.words, data.aligned.norms,
                          data.aligned.concept_rows, archive.split, options);
  } else {
    report = evaluate_plsr(*archive.plsr, data.words, data.aligned.norms,
                           data.aligned.concept_rows, archive.split, options);
  }

  if (!args.dataset.empty())
    report.dataset = args.dataset;
  else if (const auto it = archive.run_config.find("dataset"); it != archive.run_config.end())
    report.dataset = it->second;

  report.parameters = archive.run_config;
  report.parameters["pool"] = args.pool;
  report.parameters["weighted"] = args.weighted ? "true" : "false";
  report.parameters["top_n"] = join_ints(args.top_ns);

  emit(args.out, args.format == "json" ? render_json(report) : render_table(report));
  return 0;
}

// ----------------------------------------------------------------- rank ---

struct RankArgs {
  std::string model;
  std::string embeddings;
  std::string norms;  // optional; enables gold marks
  std::string out;
  std::string format = "table";
  std::vector<std::string> words;
  Index top = 10;
};

std::string render_rank_table(const std::vector<QualitativeEntry>& entries) {
  // One TSV row per ranked feature; '*' marks gold pairs from the norms.
  std::string out = "word\trank\tfeature\tscore\tgold\n";
  char buffer[64];
  for (const QualitativeEntry& entry : entries) {
    if (!entry.ok()) {
      out += entry.word + "\t-\terror: " + entry.error + "\t\t\n";
      continue;
    }
    for (std::size_t r = 0; r < entry.rows.size(); ++r) {
      const QualitativeRow& row = entry.rows[r];
      std::snprintf(buffer, sizeof buffer, "%.4f", row.score);
      out += entry.word + "\t" + std::to_string(r + 1) + "\t" + row.feature + "\t" + buffer +
             "\t" + (row.in_gold ? "*" : "") + "\n";
    }
  }
  return out;
}

std::string render_rank_json(const std::vector<QualitativeEntry>& entries) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const QualitativeEntry& entry : entries) {
    nlohmann::ordered_json item;
    item["word"] = entry.word;
    if (!entry.ok()) {
      item["error"] = entry.error;
    } else {
      nlohmann::ordered_json rows = nlohmann::ordered_json::array();
      for (const QualitativeRow& row : entry.rows)
        rows.push_back({{"feature", row.feature}, {"score", row.score}, {"gold", row.in_gold}});
      item["features"] = rows;
    }
    doc.push_back(item);
  }
  return doc.dump(2) + "\n";
}

int run_rank(const RankArgs& args) {
  ModelArchive archive = load_model(args.model);

  std::optional<Index> expected_dim;
  if (archive.kind == "f2v")
    expected_dim = archive.f2v->config.dim;
  else
    expected_dim = archive.plsr->x_mean.size();

  EmbeddingMatrix words = parse_embedding_file(args.embeddings, expected_dim, warn_to_stderr);

  std::optional<PropertyNorms> norms;
  if (!args.norms.empty()) norms = parse_norms_file(args.norms, warn_to_stderr);
  const PropertyNorms* norms_ptr = norms ? &*norms : nullptr;

  std::vector<std::string> queries;
  queries.reserve(args.words.size());
  for (const std::string& word : args.words) queries.push_back(to_lower(word));

  std::vector<QualitativeEntry> entries;
  if (archive.kind == "f2v") {
    archive.f2v->word_embeddings = &words;
    entries = qualitative_table(*archive.f2v, words, queries, args.top, norms_ptr);
  } else {
    const PlsrModel& model = *archive.plsr;
    const WordRanker ranker = [&model](Eigen::Ref<const Vector> word_vec, Index top_k) {
      const Vector prediction = predict(model, word_vec);
      const Index k = std::min<Index>(top_k, prediction.size());
      std::vector<RankedFeature> ranked;
      for (const Index f : top_k_features_from_prediction(prediction, k))
        ranked.push_back({f, prediction[f]});
      return ranked;
    };
    entries = qualitative_table(words, queries, args.top, norms_ptr, archive.features, ranker);
  }

  std::size_t succeeded = 0;
  for (const QualitativeEntry& entry : entries)
    if (entry.ok()) ++succeeded;
  if (succeeded == 0)
    throw InputError("none of the query words is in the embedding lexicon");

  emit(args.out, args.format == "json" ? render_rank_json(entries) : render_rank_table(entries));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"feature embeddings in a pretrained word-vector space"};
  app.require_subcommand(1);

  TrainArgs train_args;
  CLI::App* train_cmd =
      app.add_subcommand("train", "fit a model on property norms and save an archive");
  train_cmd->add_option("--embeddings", train_args.embeddings, "word vectors, GloVe text format")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--norms", train_args.norms, "property norms TSV (concept/feature/pf)")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--alias", train_args.alias, "concept->word alias TSV")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--method", train_args.method, "f2v (feature embeddings) or plsr")
      ->required()
      ->check(CLI::IsMember({"f2v", "plsr"}));
  train_cmd->add_option("--out", train_args.out, "model archive output path")->required();
  train_cmd->add_option("--n-train", train_args.n_train, "number of training concepts")
      ->required()
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", train_args.seed, "split/init/sampling seed")
      ->capture_default_str();
  train_cmd->add_option("--dataset", train_args.dataset,
                        "dataset label for reports (default: norms file stem)");
  train_cmd->add_option("--loss-trace", train_args.loss_trace, "per-epoch loss trace file");
  train_cmd->add_option("--report", train_args.report,
                        "dropped-concept report file (default: stderr)");
  train_cmd->add_option("--lr", train_args.lr, "learning rate")->capture_default_str();
  train_cmd->add_option("--epochs", train_args.epochs, "training epochs")->capture_default_str();
  train_cmd->add_option("--neg-rate", train_args.neg_rate, "negatives per positive pair")
      ->capture_default_str();
  train_cmd->add_option("--batch-size", train_args.batch_size, "minibatch size")
      ->capture_default_str();
  train_cmd->add_option("--beta1", train_args.beta1, "Adam beta1")->capture_default_str();
  train_cmd->add_option("--beta2", train_args.beta2, "Adam beta2")->capture_default_str();
  train_cmd->add_option("--eps", train_args.eps, "Adam epsilon")->capture_default_str();
  train_cmd->add_option("--init-scale", train_args.init_scale,
                        "uniform init half-width (0 = 0.5/dim)")
      ->capture_default_str();
  train_cmd->add_option("--components", train_args.components, "PLSR latent components")
      ->capture_default_str();

  EvalArgs eval_args;
  CLI::App* eval_cmd =
      app.add_subcommand("evaluate", "score a trained model archive on its recorded split");
  eval_cmd->add_option("--model", eval_args.model, "model archive path")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--embeddings", eval_args.embeddings, "word vectors, GloVe text format")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--norms", eval_args.norms, "property norms TSV")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--alias", eval_args.alias, "concept->word alias TSV")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", eval_args.out, "report output path (default: stdout)");
  eval_cmd->add_option("--dataset", eval_args.dataset, "dataset label override");
  eval_cmd->add_option("--format", eval_args.format, "table or json")
      ->capture_default_str()
      ->check(CLI::IsMember({"table", "json"}));
  eval_cmd->add_option("--pool", eval_args.pool, "retrieval pool: all concepts or test only")
      ->capture_default_str()
      ->check(CLI::IsMember({"all", "test"}));
  eval_cmd->add_option("--top-n", eval_args.top_ns, "retrieval cutoffs (comma separated)")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", eval_args.seed,
                       "expected split seed; warns when it differs from the archive");
  eval_cmd->add_flag("--weighted", eval_args.weighted,
                     "compose concepts with production-frequency weights");

  RankArgs rank_args;
  CLI::App* rank_cmd =
      app.add_subcommand("rank", "rank features for query words with a trained model");
  rank_cmd->add_option("--model", rank_args.model, "model archive path")
      ->required()
      ->check(CLI::ExistingFile);
  rank_cmd->add_option("--embeddings", rank_args.embeddings, "word vectors, GloVe text format")
      ->required()
      ->check(CLI::ExistingFile);
  rank_cmd->add_option("--norms", rank_args.norms, "property norms TSV for gold marks")
      ->check(CLI::ExistingFile);
  rank_cmd->add_option("--words", rank_args.words, "query words")->required()->expected(-1);
  rank_cmd->add_option("--top", rank_args.top, "features per word")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  rank_cmd->add_option("--out", rank_args.out, "output path (default: stdout)");
  rank_cmd->add_option("--format", rank_args.format, "table or json")
      ->capture_default_str()
      ->check(CLI::IsMember({"table", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (train_cmd->parsed()) return run_train(train_args);
    if (eval_cmd->parsed()) return run_evaluate(eval_args);
    return run_rank(rank_args);
  } catch (const InputError& e) {
    std::cerr << "f2v: error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "f2v: error: " << e.what() << "\n";
    return 1;
  }
}
