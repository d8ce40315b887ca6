#include <doctest.h>

#include <algorithm>
#include <functional>
#include <random>
#include <sstream>

#include "fairdex/corpus_io.hpp"

using namespace fairdex;

namespace {

Run run_from(const std::string& text, ParseOptions options = {}, Diagnostics* diag = nullptr) {
  std::istringstream in(text);
  return parse_run(in, options, diag);
}

Qrels qrels_from(const std::string& text, ParseOptions options = {}, Diagnostics* diag = nullptr) {
  std::istringstream in(text);
  return parse_qrels(in, options, diag);
}

ParseOptions lenient() {
  ParseOptions o;
  o.strict = false;
  return o;
}

std::size_t error_line(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("parse_run maps fields") {
  const Run run = run_from("401 Q0 FT934-5418 1 12.7 sysA\n");
  CHECK(run.system_tag == "sysA");
  REQUIRE(run.topics.at("401").size() == 1);
  CHECK(run.topics.at("401")[0] == RunEntry{"401", "FT934-5418", 1, 12.7, "sysA"});
}

TEST_CASE("parse_run re-sorts by score and rewrites ranks") {
  const Run run = run_from("7 Q0 low 1 5.0 s\n7 Q0 high 2 7.0 s\n7 Q0 b 3 5.0 s\n");
  const auto& e = run.topics.at("7");
  CHECK(e[0].doc_id == "high");
  CHECK(e[0].rank == 1);
  CHECK(e[1].doc_id == "b");
  CHECK(e[2].doc_id == "low");
  CHECK(e[2].rank == 3);
  CHECK(run.ranked_docs("7") == std::vector<std::string>{"high", "b", "low"});
  CHECK(run.ranked_docs("missing").empty());
}

TEST_CASE("parse_run errors") {
  CHECK_THROWS_WITH_AS(run_from(""), doctest::Contains("no entries"), Error);
  CHECK_THROWS_WITH_AS(run_from("\n  \n"), doctest::Contains("no entries"), Error);
  CHECK(error_line([] { run_from("1 Q0 a 1 1 s\n1 Q0 b 2 s\n"); }) == 2);
  CHECK(error_line([] { run_from("1 Q0 a x 1 s\n"); }) == 1);
  CHECK(error_line([] { run_from("1 Q0 a 1 abc s\n"); }) == 1);
  CHECK(error_line([] { run_from("1 Q0 a 1 1 s\n1 Q0 b 2 0.5 t\n"); }) == 2);
  CHECK(error_line([] { run_from("1 Q0 a 1 1 s\n\n1 Q0 a 2 0.5 s\n"); }) == 3);
  CHECK(error_line([] { run_from("1 XX a 1 1 s\n"); }) == 1);
}

TEST_CASE("parse_run Q0 handling") {
  CHECK_NOTHROW(run_from("1 q0 a 1 1 s\n"));
  CHECK_NOTHROW(run_from("1 anything a 1 1 s\n", lenient()));
  ParseOptions custom;
  custom.q0_literal = "iter";
  CHECK_NOTHROW(run_from("1 ITER a 1 1 s\n", custom));
}

TEST_CASE("parse_run lenient duplicates keep the first entry") {
  Diagnostics diag;
  const Run run = run_from("1 Q0 a 1 1 s\n1 Q0 a 2 9 s\n", lenient(), &diag);
  REQUIRE(run.topics.at("1").size() == 1);
  CHECK(run.topics.at("1")[0].score == 1.0);
  CHECK(diag.warnings.size() == 1);
}

TEST_CASE("property: run serialization round-trips") {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 50; ++trial) {
    std::ostringstream text;
    const int topics = 1 + int(gen() % 5);
    for (int t = 0; t < topics; ++t) {
      const int n = 1 + int(gen() % 30);
      for (int i = 0; i < n; ++i) {
        text << "t" << t << " Q0 d" << i << ' ' << (gen() % 100) << ' '
             << double(gen() % 7) / 3.0 << " sys\n";
      }
    }
    const Run first = run_from(text.str());
    std::ostringstream out;
    write_run(out, first);
    const Run second = run_from(out.str());
    CHECK(first == second);
    std::ostringstream again;
    write_run(again, second);
    CHECK(out.str() == again.str());
  }
}

TEST_CASE("parse_qrels") {
  const Qrels q = qrels_from("901 0 BLOG06-1234 2\n");
  CHECK(q.grade("901", "BLOG06-1234") == 2);
  CHECK_FALSE(q.grade("901", "other").has_value());
  CHECK(q.size() == 1);
}

TEST_CASE("parse_qrels threshold view") {
  const Qrels q = qrels_from("1 0 g0 0\n1 0 g1 1\n1 0 g2 2\n1 0 g3 3\n1 0 g4 4\n");
  CHECK(q.relevant_docs("1", 1) == DocSet{"g1", "g2", "g3", "g4"});
  CHECK(q.relevant_docs("1", 3) == DocSet{"g3", "g4"});
  CHECK(q.relevant_count("1", 1) == 4);
  CHECK(q.relevant_count("absent", 1) == 0);
}

TEST_CASE("parse_qrels errors") {
  CHECK_THROWS_WITH_AS(qrels_from("1 0 a 1\n1 0 a 0\n"), doctest::Contains("(1, a)"), ParseError);
  CHECK(error_line([] { qrels_from("1 0 a 1\n1 0 b x\n"); }) == 2);
  CHECK(error_line([] { qrels_from("1 0 a -1\n"); }) == 1);
  CHECK(error_line([] { qrels_from("1 0 a\n"); }) == 1);
  CHECK_THROWS_AS(Qrels({{"1", {{"a", -2}}}}), Error);
  Diagnostics diag;
  const Qrels q = qrels_from("1 0 a 1\n1 0 a 0\n", lenient(), &diag);
  CHECK(q.grade("1", "a") == 1);
  CHECK(diag.warnings.size() == 1);
}

TEST_CASE("property: qrels parsing ignores line order") {
  std::vector<std::string> lines;
  for (int t = 0; t < 5; ++t) {
    for (int d = 0; d < 20; ++d) {
      lines.push_back(std::to_string(t) + " 0 doc" + std::to_string(d) + " " + std::to_string((t * d) % 3));
    }
  }
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& l : v) s += l + "\n";
    return s;
  };
  const Qrels base = qrels_from(join(lines));
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(lines.begin(), lines.end(), gen);
    CHECK(qrels_from(join(lines)) == base);
  }
  std::ostringstream out;
  write_qrels(out, base);
  CHECK(qrels_from(out.str()) == base);
}

TEST_CASE("prefix rules resolve newswire sources") {
  std::istringstream in("FBIS\tfbis\nFR\tfr\nFT\tft\nLA\tla\n");
  const CategorySource src = parse_prefix_rules(in);
  const Qrels q;
  CHECK(resolve_category("FT934-5418", "401", src, q) == "ft");
  CHECK(resolve_category("FBIS3-10082", "401", src, q) == "fbis");
  CHECK(resolve_category("FR940104-0-00001", "401", src, q) == "fr");
  CHECK(src.categories() == std::vector<std::string>{"fbis", "fr", "ft", "la"});
}

TEST_CASE("prefix rules may not overlap") {
  CHECK_THROWS_AS(CategorySource::prefix_rules({{"F", "f"}, {"FT", "ft"}}), Error);
  CHECK_THROWS_AS(CategorySource::prefix_rules({{"FT", "ft"}, {"FT", "x"}}), Error);
}

TEST_CASE("grade map resolves through the qrels") {
  std::istringstream in("1\tno_opinion\n2\tnegative\n3\tmixed\n4\tpositive\n");
  const CategorySource src = parse_grade_map(in);
  const Qrels q = qrels_from("901 0 BLOG06-1 4\n901 0 BLOG06-2 2\n901 0 BLOG06-3 0\n");
  CHECK(resolve_category("BLOG06-1", "901", src, q) == "positive");
  CHECK(resolve_category("BLOG06-2", "901", src, q) == "negative");
  CHECK_THROWS_AS(resolve_category("BLOG06-3", "901", src, q), UnmappedDocumentsError);
  CHECK_THROWS_AS(resolve_category("BLOG06-1", "902", src, q), UnmappedDocumentsError);
  CHECK_NOTHROW(src.validate_against(q, 1));
  const CategorySource partial = CategorySource::grade_map({{1, "x"}});
  CHECK_THROWS_AS(partial.validate_against(q, 1), Error);
}

TEST_CASE("strict and lenient unmapped documents") {
  const Qrels q;
  const auto strict = CategorySource::explicit_map({{"d1", "a"}});
  try {
    resolve_category("d9", "1", strict, q);
    FAIL("expected an error");
  } catch (const UnmappedDocumentsError& e) {
    CHECK(e.doc_ids() == std::vector<std::string>{"d9"});
    CHECK(std::string(e.what()).find("d9") != std::string::npos);
  }

  const auto loose = CategorySource::explicit_map({{"d1", "a"}}, CategoryOptions{false, false});
  Diagnostics diag;
  CHECK(resolve_category("d9", "1", loose, q, &diag) == kUnknownCategory);
  CHECK(resolve_category("d8", "1", loose, q, &diag) == kUnknownCategory);
  CHECK(diag.unknown_category_lookups == 2);
  CHECK(loose.categories() == std::vector<std::string>{"a"});

  const auto counted = CategorySource::explicit_map({{"d1", "a"}}, CategoryOptions{false, true});
  CHECK(counted.categories() == std::vector<std::string>{"a", std::string(kUnknownCategory)});
}

TEST_CASE("property: strict validated sources never yield the unknown category for relevant docs") {
  std::mt19937_64 gen(12);
  CategorySource::Table table;
  std::map<std::string, Qrels::TopicJudgments> judgments;
  for (int d = 0; d < 200; ++d) {
    const std::string doc = "doc" + std::to_string(d);
    table.emplace_back(doc, "c" + std::to_string(gen() % 4));
    judgments[std::to_string(d % 7)][doc] = int(gen() % 3);
  }
  const auto src = CategorySource::explicit_map(table);
  const Qrels q(judgments);
  for (const auto& topic : q.topics()) {
    for (const auto& doc : q.relevant_docs(topic)) {
      CHECK(resolve_category(doc, topic, src, q) != kUnknownCategory);
    }
  }
}

TEST_CASE("category map parsing") {
  std::istringstream ok("d1\ta\nd2\tb\r\nd3\ta\n");
  const auto src = parse_category_map(ok);
  CHECK(src.categories() == std::vector<std::string>{"a", "b"});
  CHECK(src.mode() == CategoryMode::ExplicitFile);

  std::istringstream dup("d1\ta\nd1\tb\n");
  CHECK_THROWS_AS(parse_category_map(dup), Error);
  std::istringstream bad("d1 a\n");
  CHECK_THROWS_AS(parse_category_map(bad), ParseError);
  std::istringstream reserved("d1\t__unknown__\n");
  CHECK_THROWS_AS(parse_category_map(reserved), Error);
  std::istringstream empty("");
  CHECK_THROWS_AS(parse_category_map(empty), Error);

  std::istringstream round("d2\tb\nd1\ta\n");
  const auto first = parse_category_map(round);
  std::ostringstream out;
  write_category_source(out, first);
  std::istringstream back(out.str());
  CHECK(parse_category_map(back) == first);
}

TEST_CASE("parse_target") {
  const std::vector<std::string> cats{"a", "b"};
  std::istringstream u("uniform\n");
  CHECK(parse_target(u, cats) == TargetSpec::uniform());
  std::istringstream p("Population\n");
  CHECK(parse_target(p, cats) == TargetSpec::population());

  std::istringstream custom("a 0.25\nb\t0.75\n");
  const auto t = parse_target(custom, cats, "skewed");
  CHECK(t.kind == TargetKind::Custom);
  CHECK(t.name == "skewed");
  CHECK(t.table == std::vector<std::pair<std::string, double>>{{"a", 0.25}, {"b", 0.75}});

  std::istringstream over("a 0.5\nb 0.6\n");
  CHECK_THROWS_WITH_AS(parse_target(over, cats), doctest::Contains("sum"), Error);
  std::istringstream missing("a 1.0\n");
  CHECK_THROWS_AS(parse_target(missing, cats), Error);
  std::istringstream extra("a 0.5\nb 0.25\nc 0.25\n");
  CHECK_THROWS_AS(parse_target(extra, cats), Error);
  std::istringstream zero("a 0\nb 1\n");
  CHECK_THROWS_AS(parse_target(zero, cats), Error);
  std::istringstream junk("a x\nb 1\n");
  CHECK_THROWS_AS(parse_target(junk, cats), ParseError);
  std::istringstream near("a 0.3333333333\nb 0.6666666667\n");
  CHECK_NOTHROW(parse_target(near, cats));
}

TEST_CASE("labels") {
  CHECK(is_valid_label("ft"));
  CHECK_FALSE(is_valid_label(""));
  CHECK_FALSE(is_valid_label("a b"));
  CHECK_FALSE(is_valid_label("a,b"));
  CHECK_FALSE(is_valid_label("a\"b"));
}
