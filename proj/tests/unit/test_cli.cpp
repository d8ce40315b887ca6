#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fairdex/cli.hpp"
#include "fairdex/report_io.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = fairdex::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("fairdex_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fairdex::CsvTable csv(const fs::path& p) {
  std::ifstream in(p);
  return fairdex::read_csv(in, p.string());
}

const char* kSpec = R"({
  "n_topics": 6, "categories": ["a", "b", "c"], "relevant_per_topic": [5, 10],
  "category_skew": {"a": 6, "b": 2, "c": 1}, "n_systems": 3,
  "systems": [{"profile": "relevance_optimal"}, {"profile": "fairness_optimal"},
              {"profile": "noisy", "noise": 0.3}]
})";

// Synthesizes kSpec into `dir` and returns the collection directory.
fs::path synth_into(const fs::path& dir, const std::string& seed = "4") {
  write(dir / "spec.json", kSpec);
  const auto r = run_cli({"synth", "--spec", (dir / "spec.json").string(), "--seed", seed, "--out",
                          (dir / "coll").string()});
  REQUIRE(r.code == 0);
  return dir / "coll";
}

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run_cli({"--help"}).code == 0);
  CHECK(run_cli({"eval", "--help"}).code == 0);
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"frobnicate"}).code == 2);
  CHECK(run_cli({"eval", "--qrels", "/nonexistent/q.txt", "--categories", "/nonexistent/c"}).code == 2);
}

TEST_CASE("synth minimal spec") {
  const auto dir = scratch("synth_min");
  write(dir / "spec.json", R"({"n_topics": 1, "categories": ["x", "y"], "n_systems": 2,
    "systems": [{"profile": "relevance_optimal"}, {"profile": "random"}]})");
  const auto r = run_cli({"synth", "--spec", (dir / "spec.json").string(), "--out", (dir / "o").string()});
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "o" / "qrels.txt"));
  CHECK(fs::exists(dir / "o" / "categories.tsv"));
  CHECK(fs::exists(dir / "o" / "manifest.json"));
  std::size_t runs = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "o" / "runs")) ++runs;
  CHECK(runs == 2);
}

TEST_CASE("synth is byte-deterministic") {
  const auto dir = scratch("synth_det");
  const auto a = synth_into(dir / "a", "11");
  const auto b = synth_into(dir / "b", "11");
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) CHECK(slurp(e.path()) == slurp(b / fs::relative(e.path(), a)));
  }
}

TEST_CASE("synth rejects invalid specs") {
  const auto dir = scratch("synth_bad");
  write(dir / "zero.json", R"({"n_topics": 0, "categories": ["x"]})");
  CHECK(run_cli({"synth", "--spec", (dir / "zero.json").string(), "--out", (dir / "o").string()}).code == 2);
  write(dir / "broken.json", "{");
  CHECK(run_cli({"synth", "--spec", (dir / "broken.json").string(), "--out", (dir / "o").string()}).code == 2);
  CHECK_FALSE(fs::exists(dir / "o"));
}

TEST_CASE("eval writes leaderboards for every target") {
  const auto dir = scratch("eval");
  const auto coll = synth_into(dir);
  const auto out = dir / "report";
  const auto r = run_cli({"eval", "--runs-dir", (coll / "runs").string(), "--qrels", (coll / "qrels.txt").string(),
                          "--prefix-rules", (coll / "prefix_rules.tsv").string(), "--target", "uniform",
                          "--target", "population", "--out", out.string()});
  REQUIRE(r.code == 0);
  const auto board = csv(out / "leaderboard.csv");
  CHECK(board.rows.size() == 3);
  for (const std::string c : {"kl_uniform", "fair_uniform", "mean_uniform", "gmean_uniform", "kl_population",
                              "fair_population", "mean_population", "gmean_population"}) {
    CHECK_NOTHROW(board.column(c));
  }
  CHECK(csv(out / "topics.csv").rows.size() == 3 * 6);
  const auto j = nlohmann::json::parse(slurp(out / "leaderboard.json"));
  CHECK(j["schema"] == "fairdex/1");
  CHECK(j["config"]["lenient"] == false);

  // Same inputs, byte-identical outputs, whatever the thread count.
  const auto again = dir / "again";
  REQUIRE(run_cli({"eval", "--runs-dir", (coll / "runs").string(), "--qrels", (coll / "qrels.txt").string(),
                   "--categories", (coll / "categories.tsv").string(), "--target", "uniform", "--target",
                   "population", "--threads", "1", "--out", again.string()})
              .code == 0);
  CHECK(slurp(out / "leaderboard.csv") == slurp(again / "leaderboard.csv"));
  CHECK(slurp(out / "topics.csv") == slurp(again / "topics.csv"));
}

TEST_CASE("eval format and config precedence") {
  const auto dir = scratch("eval_cfg");
  const auto coll = synth_into(dir);
  write(dir / "cfg.json", R"({"cutoff": "R", "targets": ["population"], "top": 1, "interpolations": ["gmean"]})");
  const auto out = dir / "report";
  const auto r = run_cli({"eval", "--runs-dir", (coll / "runs").string(), "--qrels", (coll / "qrels.txt").string(),
                          "--prefix-rules", (coll / "prefix_rules.tsv").string(), "--config",
                          (dir / "cfg.json").string(), "--cutoff", "20", "--format", "json", "--out",
                          out.string()});
  REQUIRE(r.code == 0);
  CHECK_FALSE(fs::exists(out / "leaderboard.csv"));
  const auto j = nlohmann::json::parse(slurp(out / "leaderboard.json"));
  CHECK(j["config"]["cutoff"] == "20");
  CHECK(j["columns"] == nlohmann::json::parse(
                           R"(["tag","r_prec","n_r_prec","kl_population","fair_population","gmean_population"])"));
  CHECK(j["leaderboards"]["r_prec"].size() == 1);

  write(dir / "bad.json", R"({"cutof": 5})");
  CHECK(run_cli({"eval", "--runs-dir", (coll / "runs").string(), "--qrels", (coll / "qrels.txt").string(),
                 "--prefix-rules", (coll / "prefix_rules.tsv").string(), "--config", (dir / "bad.json").string(),
                 "--out", (dir / "x").string()})
            .code == 2);
}

TEST_CASE("eval reports the offending qrels line") {
  const auto dir = scratch("eval_line");
  const auto coll = synth_into(dir);
  std::istringstream lines(slurp(coll / "qrels.txt"));
  std::string text, line;
  for (int n = 1; std::getline(lines, line); ++n) text += (n == 17 ? "001 0 broken-line" : line) + "\n";
  write(dir / "bad_qrels.txt", text);
  const auto out = dir / "report";
  const auto r = run_cli({"eval", "--runs-dir", (coll / "runs").string(), "--qrels",
                          (dir / "bad_qrels.txt").string(), "--prefix-rules",
                          (coll / "prefix_rules.tsv").string(), "--out", out.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find(":17:") != std::string::npos);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("eval strict mode lists unmapped documents and writes nothing") {
  const auto dir = scratch("eval_unmapped");
  const auto coll = synth_into(dir);
  // Drop the rule for the last category.
  write(dir / "rules.tsv", "c0-\ta\nc1-\tb\n");
  const auto out = dir / "report";
  const std::vector<std::string> args{"eval", "--runs-dir", (coll / "runs").string(), "--qrels",
                                      (coll / "qrels.txt").string(), "--prefix-rules",
                                      (dir / "rules.tsv").string(), "--out", out.string()};
  const auto r = run_cli(args);
  CHECK(r.code == 2);
  CHECK(r.err.find("c2-001-") != std::string::npos);
  CHECK_FALSE(fs::exists(out));

  auto lenient = args;
  lenient.push_back("--lenient");
  const auto l = run_cli(lenient);
  CHECK(l.code == 0);
  CHECK(l.err.find("warning") != std::string::npos);
}

TEST_CASE("eval needs two runs unless raw-only") {
  const auto dir = scratch("eval_single");
  const auto coll = synth_into(dir);
  const auto run = (coll / "runs" / "sys01-relopt.run").string();
  const std::vector<std::string> base{"eval", "--run", run, "--qrels", (coll / "qrels.txt").string(),
                                      "--prefix-rules", (coll / "prefix_rules.tsv").string(), "--out",
                                      (dir / "o").string()};
  CHECK(run_cli(base).code == 2);
  auto raw = base;
  raw.push_back("--raw-only");
  CHECK(run_cli(raw).code == 0);
  CHECK(csv(dir / "o" / "leaderboard.csv").header == std::vector<std::string>{"tag", "r_prec", "kl_uniform"});
}

TEST_CASE("correlate") {
  const auto dir = scratch("correlate");
  write(dir / "board.csv",
        "tag,r_prec,fair_uniform,mean_uniform\n"
        "s1,0.9,0.0,0.4\n"
        "s2,0.5,0.5,0.6\n"
        "s3,0.1,1.0,0.5\n");
  auto r = run_cli({"correlate", "--leaderboard", (dir / "board.csv").string(), "--metric", "fair_uniform",
                    "--pair", "r_prec:r_prec", "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto tau = csv(dir / "tau.csv");
  CHECK(tau.header == std::vector<std::string>{"pair", "metric_a", "metric_b", "tau_b", "n_systems"});
  CHECK(tau.rows[0][3] == "-1");
  CHECK(tau.rows[1][3] == "1");
  CHECK(tau.rows[0][4] == "3");

  r = run_cli({"correlate", "--leaderboard", (dir / "board.csv").string(), "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(csv(dir / "tau.csv").rows.size() == 2);

  CHECK(run_cli({"correlate", "--leaderboard", (dir / "board.csv").string(), "--metric", "fair_nope"}).code == 2);
}

TEST_CASE("correlate reads eval JSON output") {
  const auto dir = scratch("correlate_json");
  const auto coll = synth_into(dir);
  REQUIRE(run_cli({"eval", "--runs-dir", (coll / "runs").string(), "--qrels", (coll / "qrels.txt").string(),
                   "--prefix-rules", (coll / "prefix_rules.tsv").string(), "--out", (dir / "r").string()})
              .code == 0);
  const auto r = run_cli({"correlate", "--leaderboard", (dir / "r" / "leaderboard.json").string(), "--out",
                          (dir / "r").string()});
  CHECK(r.code == 0);
  CHECK(csv(dir / "r" / "tau.csv").rows.size() == 3);
}

TEST_CASE("bias") {
  const auto dir = scratch("bias");
  write(dir / "cats.tsv", "d1\ta\nd2\tb\nd3\ta\nd4\tb\n");
  write(dir / "qrels.txt", "t1 0 d1 1\nt1 0 d2 1\nt2 0 d3 1\nt2 0 d4 1\nt3 0 d1 0\n");
  const auto r = run_cli({"bias", "--qrels", (dir / "qrels.txt").string(), "--categories",
                          (dir / "cats.tsv").string(), "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto summary = nlohmann::json::parse(slurp(dir / "bias_summary.json"));
  CHECK(summary["scarce_categories"].empty());
  CHECK(summary["empty_topics"] == nlohmann::json::parse(R"(["t3"])"));
  const auto rows = csv(dir / "bias_topics.csv");
  CHECK(rows.rows.size() == 6);
  CHECK(rows.rows[4] == std::vector<std::string>{"t3", "a", "0", "0", "1"});
}

TEST_CASE("bias on a skewed synthetic collection matches an exact tally") {
  const auto dir = scratch("bias_skew");
  write(dir / "spec.json", R"({"n_topics": 40, "categories": ["w", "x", "y", "z"],
    "category_skew": {"w": 8, "x": 1, "y": 1, "z": 1}})");
  REQUIRE(run_cli({"synth", "--spec", (dir / "spec.json").string(), "--seed", "2", "--out",
                   (dir / "c").string()})
              .code == 0);
  REQUIRE(run_cli({"bias", "--qrels", (dir / "c" / "qrels.txt").string(), "--prefix-rules",
                   (dir / "c" / "prefix_rules.tsv").string(), "--out", dir.string()})
              .code == 0);
  std::map<std::string, double> tally;
  double total = 0;
  std::istringstream qrels(slurp(dir / "c" / "qrels.txt"));
  std::string topic, iter, doc;
  int grade;
  while (qrels >> topic >> iter >> doc >> grade) {
    if (grade < 1) continue;
    tally[doc.substr(0, 3)] += 1;
    total += 1;
  }
  const auto summary = nlohmann::json::parse(slurp(dir / "bias_summary.json"));
  const auto& props = summary["global_proportions"];
  CHECK(props["w"].get<double>() == doctest::Approx(tally["c0-"] / total).epsilon(1e-12));
  CHECK(props["z"].get<double>() == doctest::Approx(tally["c3-"] / total).epsilon(1e-12));
  CHECK(props["w"].get<double>() == doctest::Approx(8.0 / 11).epsilon(0.1));
  CHECK(props["x"].get<double>() == doctest::Approx(1.0 / 11).epsilon(0.35));
}
