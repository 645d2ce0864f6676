#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "xmtf/jsonl.hpp"
#include "util.hpp"

using xmtf::json;

// End-to-end coverage of the command line tool: each subcommand is run as a
// child process and judged on exit code, stdout, stderr, and output files.

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

testutil::TempDir& scratch() {
  static testutil::TempDir dir;
  return dir;
}

std::filesystem::path fresh_path(const std::string& stem) {
  static int counter = 0;
  return scratch().path() / (stem + "-" + std::to_string(counter++));
}

std::string quoted(const std::filesystem::path& path) {
  return "\"" + path.string() + "\"";
}

RunResult run_cli(const std::string& args, const std::string& env = "") {
  const auto out_path = fresh_path("stdout");
  const auto err_path = fresh_path("stderr");
  std::string cmd;
  if (!env.empty()) cmd += env + " ";
  cmd += quoted(XMTF_CLI);
  if (!args.empty()) cmd += " " + args;
  cmd += " > " + quoted(out_path) + " 2> " + quoted(err_path);
  const int rc = std::system(cmd.c_str());
  RunResult result;
  if (WIFEXITED(rc)) result.code = WEXITSTATUS(rc);
  result.out = slurp(out_path);
  result.err = slurp(err_path);
  return result;
}

std::string data(const std::string& name) {
  return quoted(testutil::data_dir() / name);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::size_t line_count(const std::string& text) {
  std::size_t count = 0;
  for (char c : text) {
    if (c == '\n') ++count;
  }
  return count;
}

}  // namespace

TEST_CASE("help lists every subcommand") {
  const RunResult r = run_cli("--help");
  CHECK(r.code == 0);
  for (const char* name : {"render", "mix", "pack", "eval", "audit",
                           "labeldist", "passk", "bleu", "genstats"}) {
    CAPTURE(name);
    CHECK(r.out.find(name) != std::string::npos);
  }
}

TEST_CASE("bare invocation and unknown flags fail") {
  CHECK(run_cli("").code == 1);
  CHECK(run_cli("passk --bogus 1").code == 1);
  CHECK(run_cli("frobnicate").code == 1);
}

TEST_CASE("missing input files exit with the io code") {
  const RunResult r =
      run_cli("bleu --hyp /nonexistent/h.txt --refs /nonexistent/r.txt");
  CHECK(r.code == 2);
  CHECK(r.err.find("io error:") != std::string::npos);
}

TEST_CASE("render walks every record and template deterministically") {
  const std::string args = "render --specs " + data("mixspec/specs.json");
  const RunResult first = run_cli(args);
  REQUIRE(first.code == 0);
  // dataset_a: 3 records x 3 templates; dataset_b: 2 records x 1 template.
  CHECK(line_count(first.out) == 11);
  CHECK(first.out.find("Question: one") != std::string::npos);
  CHECK(first.out.find("Swali: three") != std::string::npos);
  CHECK(first.out.find("\"good\"") != std::string::npos);

  const RunResult second = run_cli(args);
  CHECK(second.out == first.out);

  const auto out_file = fresh_path("render.jsonl");
  const RunResult to_file = run_cli(args + " --out " + quoted(out_file));
  CHECK(to_file.code == 0);
  CHECK(slurp(out_file) == first.out);
}

TEST_CASE("mix reproduces the frozen stream and its manifest") {
  const auto out = fresh_path("mix.jsonl");
  const std::string args = "mix --specs " + data("mixspec/specs.json") +
                           " --config " + data("mix_config.json") + " --out " +
                           quoted(out);
  const RunResult r = run_cli(args);
  REQUIRE(r.code == 0);
  CHECK(slurp(out) == slurp(testutil::data_dir() / "golden_mixture_seed7.jsonl"));
  // The language table lands on stderr so stdout stays pipeable.
  CHECK(r.err.find("Language") != std::string::npos);

  const json manifest =
      xmtf::read_json_file(out.string() + ".manifest.json");
  CHECK(manifest.at("total_examples") == 10);
  CHECK(manifest.at("seed") == 7);
  CHECK(manifest.at("per_language").at("a").at("count") == 5);
  CHECK(manifest.at("checksum").get<std::string>().size() == 16);

  const auto again = fresh_path("mix.jsonl");
  run_cli("mix --specs " + data("mixspec/specs.json") + " --config " +
          data("mix_config.json") + " --out " + quoted(again));
  CHECK(slurp(again) == slurp(out));
}

TEST_CASE("the seed flag beats the environment, which beats the config") {
  const auto env_out = fresh_path("mix.jsonl");
  const std::string base = "mix --specs " + data("mixspec/specs.json") +
                           " --config " + data("mix_config.json") + " --out ";
  REQUIRE(run_cli(base + quoted(env_out), "XMTF_SEED=9").code == 0);

  const auto flag_out = fresh_path("mix.jsonl");
  REQUIRE(run_cli(base + quoted(flag_out) + " --seed 9").code == 0);
  CHECK(slurp(env_out) == slurp(flag_out));
  CHECK(slurp(env_out) !=
        slurp(testutil::data_dir() / "golden_mixture_seed7.jsonl"));

  // An explicit flag wins even with the environment set.
  const auto both_out = fresh_path("mix.jsonl");
  REQUIRE(run_cli(base + quoted(both_out) + " --seed 7", "XMTF_SEED=9").code ==
          0);
  CHECK(slurp(both_out) ==
        slurp(testutil::data_dir() / "golden_mixture_seed7.jsonl"));
}

TEST_CASE("mix derives machine-translated prompts on request") {
  const auto out = fresh_path("mix.jsonl");
  testutil::TempDir dir;
  write_file(dir.path() / "config.json",
             R"({"target_proportions": {"a": 0.5, "b": 0.5},)"
             R"( "total_examples": 20, "seed": 1, "variant": "en_plus_mt"})");
  const RunResult r = run_cli(
      "mix --specs " + data("mixspec/specs.json") + " --config " +
      quoted(dir.path() / "config.json") + " --translator uppercase --out " +
      quoted(out));
  REQUIRE(r.code == 0);
  CHECK(slurp(out).find("QUESTION: ") != std::string::npos);
}

TEST_CASE("pack writes identical shards for identical input") {
  const auto dir_a = fresh_path("shards");
  const auto dir_b = fresh_path("shards");
  const auto stats_a = fresh_path("stats.json");
  const auto stats_b = fresh_path("stats.json");
  const std::string base =
      "pack --in " + data("golden_mixture_seed7.jsonl") + " --l-max 64 ";
  REQUIRE(run_cli(base + "--out-dir " + quoted(dir_a) + " --out " +
                  quoted(stats_a))
              .code == 0);
  REQUIRE(run_cli(base + "--out-dir " + quoted(dir_b) + " --out " +
                  quoted(stats_b))
              .code == 0);

  CHECK(slurp(stats_a) == slurp(stats_b));
  const json stats = xmtf::read_json_file(stats_a);
  CHECK(stats.at("pairs_seen") == 10);
  CHECK(stats.at("pairs_packed") == 10);
  CHECK(stats.at("config").at("l_max") == 64);
  CHECK(stats.at("shards").get<std::size_t>() >= 1);

  CHECK(slurp(dir_a / "shard-00000.xmfs") == slurp(dir_b / "shard-00000.xmfs"));
  CHECK(slurp(dir_a / "index.json") == slurp(dir_b / "index.json"));
  const json index = xmtf::read_json_file(dir_a / "index.json");
  CHECK(index.at("total_sequences").get<std::size_t>() >= 1);
}

TEST_CASE("eval emits one report per prompt variant") {
  const auto out = fresh_path("eval.json");
  const std::string args = "eval --task " + data("eval_task.json") +
                           " --scorer " + data("scorer_random.json") +
                           " --model-tag demo --out " + quoted(out);
  const RunResult r = run_cli(args);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("nli_demo") != std::string::npos);
  CHECK(r.out.find("demo median") != std::string::npos);

  const json reports = xmtf::read_json_file(out);
  REQUIRE(reports.is_array());
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].at("variant") == "EN");
  CHECK(reports[1].at("variant") == "HT");
  CHECK(reports[0].at("dataset") == "nli_demo");
  CHECK(reports[0].at("num_records") == 4);
  CHECK(reports[0].at("random_baseline").get<double>() ==
        doctest::Approx(1.0 / 3.0));

  const RunResult again = run_cli(args);
  CHECK(again.out == r.out);
}

TEST_CASE("audit reports fractions and optional token estimates") {
  const std::string base = "audit --corpus " + data("audit_corpus.jsonl");
  const RunResult r = run_cli(base);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("Language") != std::string::npos);
  CHECK(r.out.find("en") != std::string::npos);
  CHECK(r.out.find("ru") != std::string::npos);
  CHECK(r.out.find("Est. tokens") == std::string::npos);

  const auto out = fresh_path("audit.json");
  const RunResult with_tokens =
      run_cli(base + " --corpus-total-tokens 700 --out " + quoted(out));
  REQUIRE(with_tokens.code == 0);
  CHECK(with_tokens.out.find("Est. tokens") != std::string::npos);
  const json report = xmtf::read_json_file(out);
  // 7 sentences: 3 en, 3 ru, 1 undetermined.
  CHECK(report.at("sentences_classified") == 7);
  CHECK(report.at("detected_fractions").at("en").get<double>() ==
        doctest::Approx(3.0 / 7.0));
  CHECK(report.at("extrapolated_tokens").at("en") == 300);
  CHECK(report.at("extrapolated_tokens").at("und") == 100);

  CHECK(run_cli(base + " --sample-rate 0").code == 1);
}

TEST_CASE("labeldist tabulates premise-hypothesis distances") {
  const RunResult r = run_cli("labeldist --samples " + data("labels.jsonl"));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("Entailment") != std::string::npos);
  CHECK(r.out.find("sw") != std::string::npos);
}

TEST_CASE("passk prints percentages and a score file") {
  const RunResult r = run_cli("passk --n 5 --c 2 --k 1 --k 2");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("40.00") != std::string::npos);
  CHECK(r.out.find("70.00") != std::string::npos);

  const auto out = fresh_path("passk.json");
  REQUIRE(run_cli("passk --problems " + data("passk_problems.jsonl") +
                  " --k 2 --model-tag demo --out " + quoted(out))
              .code == 0);
  const json report = xmtf::read_json_file(out);
  CHECK(report.at("model") == "demo");
  CHECK(report.at("problems") == 2);
  CHECK(report.at("scores").at("pass@2").get<double>() ==
        doctest::Approx(0.7).epsilon(1e-12));

  CHECK(run_cli("passk --n 5 --c 6 --k 1").code == 1);
  CHECK(run_cli("passk --k 1").code == 1);  // neither counts nor problems
}

TEST_CASE("bleu matches the worked example end to end") {
  testutil::TempDir dir;
  write_file(dir.path() / "hyp.txt", "the cat\n");
  write_file(dir.path() / "ref.txt", "the cat sat\n");
  const auto out = fresh_path("bleu.json");
  const RunResult r = run_cli("bleu --hyp " + quoted(dir.path() / "hyp.txt") +
                              " --refs " + quoted(dir.path() / "ref.txt") +
                              " --max-order 2 --out " + quoted(out));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("BLEU = 0.6065") != std::string::npos);
  const json report = xmtf::read_json_file(out);
  CHECK(report.at("bleu").get<double>() ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-9));
  CHECK(report.at("brevity_penalty").get<double>() ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-9));

  write_file(dir.path() / "short.txt", "the cat sat\nextra line\n");
  CHECK(run_cli("bleu --hyp " + quoted(dir.path() / "hyp.txt") + " --refs " +
                quoted(dir.path() / "short.txt"))
            .code == 1);
}

TEST_CASE("genstats summarizes generated strings") {
  testutil::TempDir dir;
  write_file(dir.path() / "gen.jsonl",
             "\"x = 1\\n# add\\nprint(x)\"\n\"plain\"\n");
  const auto out = fresh_path("genstats.json");
  const RunResult r =
      run_cli("genstats --in " + quoted(dir.path() / "gen.jsonl") +
              " --model-tag demo --out " + quoted(out));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("demo") != std::string::npos);
  const json report = xmtf::read_json_file(out);
  CHECK(report.at("count") == 2);
  CHECK(report.at("avg_comment_markers").get<double>() == 0.5);

  write_file(dir.path() / "bad.jsonl", "{\"not\": \"a string\"}\n");
  CHECK(run_cli("genstats --in " + quoted(dir.path() / "bad.jsonl")).code == 1);
}
