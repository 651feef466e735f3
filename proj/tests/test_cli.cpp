// End-to-end tests that spawn the installed binary. F2V_CLI_PATH is injected
// by the build so the tests always exercise the executable they were built
// with.
#include "doctest.h"
#include "json.hpp"
#include "support.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using testsupport::TempDir;

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Runs the CLI with stdout/stderr captured into files under `dir`.
RunResult run_cli(const TempDir& dir, const std::string& args) {
  static int run_id = 0;
  const auto out_path = dir.file("stdout." + std::to_string(run_id));
  const auto err_path = dir.file("stderr." + std::to_string(run_id));
  ++run_id;

  const std::string command = std::string(F2V_CLI_PATH) + " " + args + " >" +
                              out_path.string() + " 2>" + err_path.string();
  const int status = std::system(command.c_str());

  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = testsupport::slurp(out_path);
  result.err = testsupport::slurp(err_path);
  return result;
}

// Ten concepts with word vectors, three features each, plus one concept
// that has no vector and must be dropped.
void write_dataset(const TempDir& dir) {
  std::ostringstream emb;
  std::mt19937_64 gen(404);
  std::uniform_real_distribution<double> dist(-1, 1);
  for (int i = 0; i < 10; ++i) {
    emb << "w" << i;
    for (int j = 0; j < 6; ++j) emb << " " << dist(gen);
    emb << "\n";
  }
  dir.write("emb.txt", emb.str());

  std::ostringstream norms;
  norms << "concept\tfeature\tpf\n";
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 3; ++j)
      norms << "w" << i << "\tf" << (i + j) % 7 << "\t" << 5 + j << "\n";
  norms << "phantom\tf0\t8\n";
  dir.write("norms.tsv", norms.str());
}

std::string common_train_flags(const TempDir& dir) {
  return "--embeddings " + dir.file("emb.txt").string() + " --norms " +
         dir.file("norms.tsv").string() + " --n-train 7 --seed 5";
}

}  // namespace

TEST_CASE("train/evaluate/rank round trip through the binary") {
  TempDir dir;
  write_dataset(dir);

  const auto train = run_cli(dir, "train " + common_train_flags(dir) +
                                      " --method f2v --epochs 10 --out " +
                                      dir.file("m.f2v").string() + " --loss-trace " +
                                      dir.file("trace.txt").string() + " --report " +
                                      dir.file("dropped.txt").string());
  CHECK(train.exit_code == 0);
  CHECK(train.out.find("trained f2v") != std::string::npos);
  CHECK(train.out.find("dropped=1") != std::string::npos);
  CHECK(testsupport::slurp(dir.file("dropped.txt")) == "DROPPED phantom\n");

  // Loss trace: header plus one line per epoch.
  std::istringstream trace(testsupport::slurp(dir.file("trace.txt")));
  std::string line;
  int lines = 0;
  while (std::getline(trace, line)) ++lines;
  CHECK(lines == 11);

  const auto eval = run_cli(dir, "evaluate --model " + dir.file("m.f2v").string() +
                                     " --embeddings " + dir.file("emb.txt").string() +
                                     " --norms " + dir.file("norms.tsv").string());
  CHECK(eval.exit_code == 0);
  CHECK(eval.out.find("method f2v") != std::string::npos);
  CHECK(eval.out.find("Top 1") != std::string::npos);

  const auto rank = run_cli(dir, "rank --model " + dir.file("m.f2v").string() +
                                     " --embeddings " + dir.file("emb.txt").string() +
                                     " --norms " + dir.file("norms.tsv").string() +
                                     " --words w1 w2 --top 3");
  CHECK(rank.exit_code == 0);
  CHECK(rank.out.find("w1\t1\t") != std::string::npos);
  CHECK(rank.out.find("w2\t3\t") != std::string::npos);
}

TEST_CASE("the regression baseline trains and evaluates through the binary") {
  TempDir dir;
  write_dataset(dir);

  const auto train = run_cli(dir, "train " + common_train_flags(dir) +
                                      " --method plsr --components 3 --out " +
                                      dir.file("m.plsr").string());
  CHECK(train.exit_code == 0);
  CHECK(train.out.find("trained plsr") != std::string::npos);
  CHECK(train.out.find("components=3") != std::string::npos);

  const auto eval = run_cli(dir, "evaluate --model " + dir.file("m.plsr").string() +
                                     " --embeddings " + dir.file("emb.txt").string() +
                                     " --norms " + dir.file("norms.tsv").string() +
                                     " --pool test --format json");
  CHECK(eval.exit_code == 0);
  const auto doc = nlohmann::json::parse(eval.out);
  CHECK(doc.at("method") == "plsr");
  CHECK(doc.at("parameters").at("pool") == "test");

  const auto rank = run_cli(dir, "rank --model " + dir.file("m.plsr").string() +
                                     " --embeddings " + dir.file("emb.txt").string() +
                                     " --words w3 --top 2");
  CHECK(rank.exit_code == 0);
}

TEST_CASE("table and json reports carry the same numbers") {
  TempDir dir;
  write_dataset(dir);
  run_cli(dir, "train " + common_train_flags(dir) + " --method f2v --epochs 5 --out " +
                   dir.file("m").string());

  const std::string eval_flags = "evaluate --model " + dir.file("m").string() +
                                 " --embeddings " + dir.file("emb.txt").string() +
                                 " --norms " + dir.file("norms.tsv").string();
  const auto table = run_cli(dir, eval_flags);
  const auto json = run_cli(dir, eval_flags + " --format json");
  REQUIRE(table.exit_code == 0);
  REQUIRE(json.exit_code == 0);

  const auto doc = nlohmann::json::parse(json.out);
  char expected[64];

  // Every retrieval number printed in the table must match the JSON value
  // rounded to the table's two decimals.
  for (const auto& [key, value] : doc.at("retrieval").items()) {
    std::snprintf(expected, sizeof expected, "%.2f", value.get<double>());
    CHECK(table.out.find(expected) != std::string::npos);
  }
  std::snprintf(expected, sizeof expected, "%.2f", doc.at("overlap_train").get<double>());
  CHECK(table.out.find(expected) != std::string::npos);
  std::snprintf(expected, sizeof expected, "%.2f", doc.at("overlap_test").get<double>());
  CHECK(table.out.find(expected) != std::string::npos);
}

TEST_CASE("identical invocations produce byte-identical artifacts") {
  TempDir dir;
  write_dataset(dir);

  const std::string flags = common_train_flags(dir) + " --method f2v --epochs 6";
  const auto a = run_cli(dir, "train " + flags + " --out " + dir.file("a.model").string());
  const auto b = run_cli(dir, "train " + flags + " --out " + dir.file("b.model").string());
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  CHECK(testsupport::slurp(dir.file("a.model")) == testsupport::slurp(dir.file("b.model")));

  const std::string eval_flags = " --embeddings " + dir.file("emb.txt").string() +
                                 " --norms " + dir.file("norms.tsv").string() +
                                 " --format json --out ";
  run_cli(dir, "evaluate --model " + dir.file("a.model").string() + eval_flags +
                   dir.file("a.json").string());
  run_cli(dir, "evaluate --model " + dir.file("b.model").string() + eval_flags +
                   dir.file("b.json").string());
  CHECK(testsupport::slurp(dir.file("a.json")) == testsupport::slurp(dir.file("b.json")));
}

TEST_CASE("usage and input errors exit with status 2") {
  TempDir dir;
  write_dataset(dir);

  // Missing norms file, named in the error.
  const auto missing = run_cli(dir, "train --embeddings " + dir.file("emb.txt").string() +
                                        " --norms " + dir.file("nope.tsv").string() +
                                        " --method f2v --n-train 7 --out " +
                                        dir.file("x").string());
  CHECK(missing.exit_code == 2);
  CHECK(missing.err.find("nope.tsv") != std::string::npos);

  // Unknown flag.
  CHECK(run_cli(dir, "train --bogus").exit_code == 2);
  // Unknown subcommand.
  CHECK(run_cli(dir, "frobnicate").exit_code == 2);
  // Missing required flags.
  CHECK(run_cli(dir, "train --method f2v").exit_code == 2);
  // Invalid enum value.
  const std::string out = dir.file("x").string();
  CHECK(run_cli(dir, "train " + common_train_flags(dir) + " --method magic --out " + out)
            .exit_code == 2);
  // n-train out of range for the aligned concept count.
  CHECK(run_cli(dir, "train --embeddings " + dir.file("emb.txt").string() + " --norms " +
                         dir.file("norms.tsv").string() +
                         " --n-train 10 --method f2v --out " + out)
            .exit_code == 2);
  // Empty rank word list.
  CHECK(run_cli(dir, "rank --model " + out + " --embeddings " + dir.file("emb.txt").string())
            .exit_code == 2);

  // Help exits cleanly.
  CHECK(run_cli(dir, "--help").exit_code == 0);
  CHECK(run_cli(dir, "train --help").exit_code == 0);
}

TEST_CASE("rank fails only when no query word is known") {
  TempDir dir;
  write_dataset(dir);
  run_cli(dir, "train " + common_train_flags(dir) + " --method f2v --epochs 2 --out " +
                   dir.file("m").string());

  const std::string base = "rank --model " + dir.file("m").string() + " --embeddings " +
                           dir.file("emb.txt").string() + " --words ";
  const auto mixed = run_cli(dir, base + "w1 galaxy");
  CHECK(mixed.exit_code == 0);
  CHECK(mixed.out.find("galaxy\t-\terror") != std::string::npos);

  const auto none = run_cli(dir, base + "galaxy nebula");
  CHECK(none.exit_code == 2);
  CHECK(none.err.find("f2v: error:") != std::string::npos);
}

TEST_CASE("evaluate warns on a seed mismatch and uses the archive split") {
  TempDir dir;
  write_dataset(dir);
  run_cli(dir, "train " + common_train_flags(dir) + " --method f2v --epochs 2 --out " +
                   dir.file("m").string());

  const std::string eval_flags = "evaluate --model " + dir.file("m").string() +
                                 " --embeddings " + dir.file("emb.txt").string() +
                                 " --norms " + dir.file("norms.tsv").string();
  const auto match = run_cli(dir, eval_flags + " --seed 5");
  CHECK(match.exit_code == 0);
  CHECK(match.err.find("warning") == std::string::npos);

  const auto mismatch = run_cli(dir, eval_flags + " --seed 6");
  CHECK(mismatch.exit_code == 0);
  CHECK(mismatch.err.find("warning") != std::string::npos);
  CHECK(mismatch.err.find("archive") != std::string::npos);
  CHECK(mismatch.out.find("split-seed 5") != std::string::npos);
}

TEST_CASE("evaluate refuses inputs that do not reproduce the archived vocabularies") {
  TempDir dir;
  write_dataset(dir);
  run_cli(dir, "train " + common_train_flags(dir) + " --method f2v --epochs 2 --out " +
                   dir.file("m").string());

  // Norms with one concept removed no longer match the archive.
  std::istringstream in(testsupport::slurp(dir.file("norms.tsv")));
  std::ostringstream pruned;
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("w9\t", 0) != 0) pruned << line << "\n";
  dir.write("pruned.tsv", pruned.str());

  const auto result = run_cli(dir, "evaluate --model " + dir.file("m").string() +
                                       " --embeddings " + dir.file("emb.txt").string() +
                                       " --norms " + dir.file("pruned.tsv").string());
  CHECK(result.exit_code == 2);
  CHECK(result.err.find("archive") != std::string::npos);
}

TEST_CASE("weighted composition changes the flag trail in the report") {
  TempDir dir;
  write_dataset(dir);
  run_cli(dir, "train " + common_train_flags(dir) + " --method f2v --epochs 2 --out " +
                   dir.file("m").string());

  const auto report = run_cli(dir, "evaluate --model " + dir.file("m").string() +
                                       " --embeddings " + dir.file("emb.txt").string() +
                                       " --norms " + dir.file("norms.tsv").string() +
                                       " --weighted --top-n 1,3 --format json");
  REQUIRE(report.exit_code == 0);
  const auto doc = nlohmann::json::parse(report.out);
  CHECK(doc.at("parameters").at("weighted") == "true");
  CHECK(doc.at("parameters").at("top_n") == "1,3");
  CHECK(doc.at("retrieval").size() == 2);
  CHECK(doc.at("retrieval").contains("1"));
  CHECK(doc.at("retrieval").contains("3"));
}
