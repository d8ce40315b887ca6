#include "fairdex/corpus_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "text_util.hpp"

namespace fairdex {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::string pair_name(std::string_view topic, std::string_view doc) {
  return "(" + std::string(topic) + ", " + std::string(doc) + ")";
}

}  // namespace

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& message)
    : Error(source + ":" + std::to_string(line) + ": " + message), line_(line) {}

UnmappedDocumentsError::UnmappedDocumentsError(std::vector<std::string> doc_ids)
    : Error([&] {
        std::string msg = "no category mapping for " + std::to_string(doc_ids.size()) +
                          " document(s):";
        for (const auto& id : doc_ids) msg += " " + id;
        return msg;
      }()),
      doc_ids_(std::move(doc_ids)) {}

void Diagnostics::merge(const Diagnostics& other) {
  warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
  unknown_category_lookups += other.unknown_category_lookups;
  std::vector<std::string> merged;
  merged.reserve(unknown_docs.size() + other.unknown_docs.size());
  std::set_union(unknown_docs.begin(), unknown_docs.end(), other.unknown_docs.begin(),
                 other.unknown_docs.end(), std::back_inserter(merged));
  unknown_docs = std::move(merged);
}

bool is_valid_label(std::string_view label) {
  if (label.empty()) return false;
  return std::none_of(label.begin(), label.end(), [](char c) {
    return detail::is_space(c) || c == ',' || c == '\n' || c == '"';
  });
}

// ---------------------------------------------------------------------------
// Runs

std::vector<std::string> Run::ranked_docs(const std::string& topic_id) const {
  std::vector<std::string> docs;
  auto it = topics.find(topic_id);
  if (it == topics.end()) return docs;
  docs.reserve(it->second.size());
  for (const auto& e : it->second) docs.push_back(e.doc_id);
  return docs;
}

std::size_t Run::size() const {
  std::size_t n = 0;
  for (const auto& [_, entries] : topics) n += entries.size();
  return n;
}

void canonicalize(Run& run) {
  for (auto& [_, entries] : run.topics) {
    std::sort(entries.begin(), entries.end(), [](const RunEntry& a, const RunEntry& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.doc_id < b.doc_id;
    });
    int rank = 1;
    for (auto& e : entries) e.rank = rank++;
  }
}

Run parse_run(std::istream& in, const ParseOptions& options, Diagnostics* diagnostics) {
  Run run;
  std::set<std::pair<std::string, std::string>> seen;
  std::string raw;
  std::size_t line_no = 0;
  bool have_tag = false;

  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = detail::strip_cr(raw);
    if (detail::is_blank(line)) continue;
    auto f = detail::split_whitespace(line);
    if (f.size() != 6) {
      throw ParseError(options.source_name, line_no,
                       "expected 6 fields (topic Q0 doc_id rank score tag), got " +
                           std::to_string(f.size()));
    }
    if (options.strict && !detail::iequals(f[1], options.q0_literal)) {
      throw ParseError(options.source_name, line_no,
                       "second field must be '" + options.q0_literal + "', got '" +
                           std::string(f[1]) + "'");
    }
    auto rank = detail::parse_int<int>(f[3]);
    if (!rank) {
      throw ParseError(options.source_name, line_no, "non-integer rank '" + std::string(f[3]) + "'");
    }
    auto score = detail::parse_double(f[4]);
    if (!score || !std::isfinite(*score)) {
      throw ParseError(options.source_name, line_no, "non-numeric score '" + std::string(f[4]) + "'");
    }
    std::string tag(f[5]);
    if (!have_tag) {
      run.system_tag = tag;
      have_tag = true;
    } else if (tag != run.system_tag) {
      throw ParseError(options.source_name, line_no,
                       "inconsistent run tag '" + tag + "' (expected '" + run.system_tag + "')");
    }

    std::string topic(f[0]);
    std::string doc(f[2]);
    if (!seen.emplace(topic, doc).second) {
      if (options.strict) {
        throw ParseError(options.source_name, line_no,
                         "duplicate entry for " + pair_name(topic, doc));
      }
      if (diagnostics) {
        diagnostics->warn(options.source_name + ":" + std::to_string(line_no) +
                          ": duplicate entry for " + pair_name(topic, doc) + " ignored");
      }
      continue;
    }
    run.topics[topic].push_back(RunEntry{topic, std::move(doc), *rank, *score, std::move(tag)});
  }
  if (!have_tag) throw Error(options.source_name + ": no entries");
  canonicalize(run);
  return run;
}

Run read_run_file(const std::filesystem::path& path, ParseOptions options,
                  Diagnostics* diagnostics) {
  auto in = open_input(path);
  options.source_name = path.string();
  return parse_run(in, options, diagnostics);
}

void write_run(std::ostream& out, const Run& run) {
  for (const auto& [topic, entries] : run.topics) {
    for (const auto& e : entries) {
      out << topic << " Q0 " << e.doc_id << ' ' << e.rank << ' ' << detail::format_double(e.score)
          << ' ' << run.system_tag << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Qrels

Qrels::Qrels(std::map<std::string, TopicJudgments> judgments) : judgments_(std::move(judgments)) {
  for (const auto& [topic, docs] : judgments_) {
    for (const auto& [doc, grade] : docs) {
      if (grade < 0) throw Error("negative grade for " + pair_name(topic, doc));
    }
  }
}

std::optional<int> Qrels::grade(std::string_view topic_id, std::string_view doc_id) const {
  auto t = judgments_.find(std::string(topic_id));
  if (t == judgments_.end()) return std::nullopt;
  auto d = t->second.find(std::string(doc_id));
  if (d == t->second.end()) return std::nullopt;
  return d->second;
}

DocSet Qrels::relevant_docs(const std::string& topic_id, int threshold) const {
  DocSet out;
  auto t = judgments_.find(topic_id);
  if (t == judgments_.end()) return out;
  for (const auto& [doc, grade] : t->second) {
    if (grade >= threshold) out.insert(doc);
  }
  return out;
}

std::size_t Qrels::relevant_count(const std::string& topic_id, int threshold) const {
  auto t = judgments_.find(topic_id);
  if (t == judgments_.end()) return 0;
  return static_cast<std::size_t>(std::count_if(
      t->second.begin(), t->second.end(), [&](const auto& kv) { return kv.second >= threshold; }));
}

std::vector<std::string> Qrels::topics() const {
  std::vector<std::string> out;
  out.reserve(judgments_.size());
  for (const auto& [topic, _] : judgments_) out.push_back(topic);
  return out;
}

std::size_t Qrels::size() const {
  std::size_t n = 0;
  for (const auto& [_, docs] : judgments_) n += docs.size();
  return n;
}

Qrels parse_qrels(std::istream& in, const ParseOptions& options, Diagnostics* diagnostics) {
  std::map<std::string, Qrels::TopicJudgments> judgments;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = detail::strip_cr(raw);
    if (detail::is_blank(line)) continue;
    auto f = detail::split_whitespace(line);
    if (f.size() != 4) {
      throw ParseError(options.source_name, line_no,
                       "expected 4 fields (topic iteration doc_id grade), got " +
                           std::to_string(f.size()));
    }
    auto grade = detail::parse_int<int>(f[3]);
    if (!grade) {
      throw ParseError(options.source_name, line_no, "non-integer grade '" + std::string(f[3]) + "'");
    }
    if (*grade < 0) {
      throw ParseError(options.source_name, line_no, "negative grade " + std::to_string(*grade));
    }
    auto [it, inserted] = judgments[std::string(f[0])].emplace(std::string(f[2]), *grade);
    if (!inserted) {
      if (options.strict) {
        throw ParseError(options.source_name, line_no,
                         "duplicate judgment for " + pair_name(f[0], f[2]));
      }
      if (diagnostics) {
        diagnostics->warn(options.source_name + ":" + std::to_string(line_no) +
                          ": duplicate judgment for " + pair_name(f[0], f[2]) + " ignored");
      }
    }
  }
  return Qrels(std::move(judgments));
}

Qrels read_qrels_file(const std::filesystem::path& path, ParseOptions options,
                      Diagnostics* diagnostics) {
  auto in = open_input(path);
  options.source_name = path.string();
  return parse_qrels(in, options, diagnostics);
}

void write_qrels(std::ostream& out, const Qrels& qrels) {
  for (const auto& [topic, docs] : qrels.judgments()) {
    for (const auto& [doc, grade] : docs) out << topic << " 0 " << doc << ' ' << grade << '\n';
  }
}

// ---------------------------------------------------------------------------
// Categories

void CategorySource::add_category(const std::string& label) {
  if (!is_valid_label(label)) throw Error("invalid category label '" + label + "'");
  if (label == kUnknownCategory) {
    throw Error("category label '" + label + "' is reserved");
  }
  if (std::find(categories_.begin(), categories_.end(), label) == categories_.end()) {
    categories_.push_back(label);
  }
}

void CategorySource::finish() {
  if (categories_.empty()) throw Error("category source defines no categories");
  if (options_.include_unknown && !options_.strict) {
    categories_.emplace_back(kUnknownCategory);
  }
}

CategorySource CategorySource::explicit_map(Table doc_to_category, CategoryOptions options,
                                            Diagnostics* diagnostics) {
  CategorySource src(CategoryMode::ExplicitFile, options);
  src.doc_table_.reserve(doc_to_category.size());
  for (auto& [doc, category] : doc_to_category) {
    if (doc.empty()) throw Error("empty doc_id in category map");
    auto [it, inserted] = src.doc_index_.emplace(doc, category);
    if (!inserted) {
      if (options.strict) throw Error("duplicate category mapping for doc '" + doc + "'");
      if (diagnostics) diagnostics->warn("duplicate category mapping for doc '" + doc + "' ignored");
      continue;
    }
    src.add_category(category);
    src.doc_table_.emplace_back(std::move(doc), std::move(category));
  }
  src.finish();
  return src;
}

CategorySource CategorySource::grade_map(std::vector<std::pair<int, std::string>> grade_to_category,
                                         CategoryOptions options) {
  CategorySource src(CategoryMode::QrelsGradeMap, options);
  std::set<int> seen;
  for (auto& [grade, category] : grade_to_category) {
    if (grade < 0) throw Error("negative grade " + std::to_string(grade) + " in grade map");
    if (!seen.insert(grade).second) {
      throw Error("duplicate grade " + std::to_string(grade) + " in grade map");
    }
    src.add_category(category);
    src.grade_table_.emplace_back(grade, std::move(category));
  }
  src.finish();
  return src;
}

CategorySource CategorySource::prefix_rules(Table prefix_to_category, CategoryOptions options) {
  CategorySource src(CategoryMode::DocIdPrefixRules, options);
  for (std::size_t i = 0; i < prefix_to_category.size(); ++i) {
    const auto& prefix = prefix_to_category[i].first;
    if (prefix.empty()) throw Error("empty prefix in prefix rules");
    for (std::size_t j = 0; j < i; ++j) {
      const auto& other = prefix_to_category[j].first;
      if (prefix.starts_with(other) || other.starts_with(prefix)) {
        throw Error("prefix rules '" + other + "' and '" + prefix +
                    "' overlap; a doc id could match both");
      }
    }
    src.add_category(prefix_to_category[i].second);
  }
  src.prefix_table_ = std::move(prefix_to_category);
  src.finish();
  return src;
}

std::optional<std::string_view> CategorySource::lookup(std::string_view doc_id,
                                                       std::string_view topic_id,
                                                       const Qrels& qrels) const {
  switch (mode_) {
    case CategoryMode::ExplicitFile: {
      auto it = doc_index_.find(std::string(doc_id));
      if (it == doc_index_.end()) return std::nullopt;
      return std::string_view(it->second);
    }
    case CategoryMode::QrelsGradeMap: {
      auto grade = qrels.grade(topic_id, doc_id);
      if (!grade) return std::nullopt;
      for (const auto& [g, category] : grade_table_) {
        if (g == *grade) return std::string_view(category);
      }
      return std::nullopt;
    }
    case CategoryMode::DocIdPrefixRules:
      for (const auto& [prefix, category] : prefix_table_) {
        if (doc_id.starts_with(prefix)) return std::string_view(category);
      }
      return std::nullopt;
  }
  return std::nullopt;
}

void CategorySource::validate_against(const Qrels& qrels, int relevance_threshold) const {
  if (mode_ != CategoryMode::QrelsGradeMap) return;
  std::set<int> missing;
  for (const auto& [topic, docs] : qrels.judgments()) {
    for (const auto& [doc, grade] : docs) {
      if (grade < relevance_threshold) continue;
      bool mapped = std::any_of(grade_table_.begin(), grade_table_.end(),
                                [g = grade](const auto& kv) { return kv.first == g; });
      if (!mapped) missing.insert(grade);
    }
  }
  if (!missing.empty()) {
    std::string msg = "grade map has no category for relevant grade(s):";
    for (int g : missing) msg += " " + std::to_string(g);
    throw Error(msg);
  }
}

bool CategorySource::operator==(const CategorySource& other) const {
  return mode_ == other.mode_ && options_.strict == other.options_.strict &&
         options_.include_unknown == other.options_.include_unknown &&
         categories_ == other.categories_ && doc_table_ == other.doc_table_ &&
         grade_table_ == other.grade_table_ && prefix_table_ == other.prefix_table_;
}

std::string resolve_category(std::string_view doc_id, std::string_view topic_id,
                             const CategorySource& source, const Qrels& qrels,
                             Diagnostics* diagnostics) {
  if (auto category = source.lookup(doc_id, topic_id, qrels)) return std::string(*category);
  if (source.options().strict) throw UnmappedDocumentsError({std::string(doc_id)});
  if (diagnostics) {
    ++diagnostics->unknown_category_lookups;
    auto& docs = diagnostics->unknown_docs;
    auto pos = std::lower_bound(docs.begin(), docs.end(), doc_id);
    if (pos == docs.end() || *pos != doc_id) docs.insert(pos, std::string(doc_id));
  }
  return std::string(kUnknownCategory);
}

namespace {

// Reads "key<TAB>value" lines.
std::vector<std::pair<std::string, std::string>> read_tsv_pairs(std::istream& in,
                                                                const std::string& source_name) {
  std::vector<std::pair<std::string, std::string>> rows;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = detail::strip_cr(raw);
    if (line.empty()) continue;
    auto f = detail::split_char(line, '\t');
    if (f.size() != 2 || f[0].empty() || f[1].empty()) {
      throw ParseError(source_name, line_no, "expected 'key<TAB>value'");
    }
    rows.emplace_back(std::string(f[0]), std::string(f[1]));
  }
  return rows;
}

}  // namespace

CategorySource parse_category_map(std::istream& in, CategoryOptions options,
                                  const std::string& source_name, Diagnostics* diagnostics) {
  return CategorySource::explicit_map(read_tsv_pairs(in, source_name), options, diagnostics);
}

CategorySource parse_grade_map(std::istream& in, CategoryOptions options,
                               const std::string& source_name) {
  std::vector<std::pair<int, std::string>> table;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = detail::strip_cr(raw);
    if (line.empty()) continue;
    auto f = detail::split_char(line, '\t');
    if (f.size() != 2 || f[1].empty()) {
      throw ParseError(source_name, line_no, "expected 'grade<TAB>category'");
    }
    auto grade = detail::parse_int<int>(f[0]);
    if (!grade) throw ParseError(source_name, line_no, "non-integer grade '" + std::string(f[0]) + "'");
    table.emplace_back(*grade, std::string(f[1]));
  }
  return CategorySource::grade_map(std::move(table), options);
}

CategorySource parse_prefix_rules(std::istream& in, CategoryOptions options,
                                  const std::string& source_name) {
  return CategorySource::prefix_rules(read_tsv_pairs(in, source_name), options);
}

CategorySource read_category_source(CategoryMode mode, const std::filesystem::path& path,
                                    CategoryOptions options, Diagnostics* diagnostics) {
  auto in = open_input(path);
  switch (mode) {
    case CategoryMode::ExplicitFile:
      return parse_category_map(in, options, path.string(), diagnostics);
    case CategoryMode::QrelsGradeMap:
      return parse_grade_map(in, options, path.string());
    case CategoryMode::DocIdPrefixRules:
      return parse_prefix_rules(in, options, path.string());
  }
  throw Error("unknown category mode");
}

void write_category_source(std::ostream& out, const CategorySource& source) {
  switch (source.mode()) {
    case CategoryMode::ExplicitFile:
      for (const auto& [doc, category] : source.doc_table()) out << doc << '\t' << category << '\n';
      break;
    case CategoryMode::QrelsGradeMap:
      for (const auto& [grade, category] : source.grade_table()) {
        out << grade << '\t' << category << '\n';
      }
      break;
    case CategoryMode::DocIdPrefixRules:
      for (const auto& [prefix, category] : source.prefix_table()) {
        out << prefix << '\t' << category << '\n';
      }
      break;
  }
}

// ---------------------------------------------------------------------------
// Targets

TargetSpec TargetSpec::custom(std::string name, std::vector<std::pair<std::string, double>> table,
                              std::span<const std::string> categories) {
  if (!is_valid_label(name)) throw Error("invalid target name '" + name + "'");
  std::map<std::string, double> by_category;
  double total = 0.0;
  for (const auto& [category, p] : table) {
    if (!std::isfinite(p) || p <= 0.0 || p > 1.0) {
      throw Error("target '" + name + "': probability for '" + category +
                  "' must be in (0, 1], got " + detail::format_double(p));
    }
    if (!by_category.emplace(category, p).second) {
      throw Error("target '" + name + "': duplicate category '" + category + "'");
    }
    total += p;
  }
  for (const auto& [category, _] : by_category) {
    if (std::find(categories.begin(), categories.end(), category) == categories.end()) {
      throw Error("target '" + name + "': unknown category '" + category + "'");
    }
  }
  std::vector<std::pair<std::string, double>> ordered;
  for (const auto& category : categories) {
    auto it = by_category.find(category);
    if (it == by_category.end()) {
      throw Error("target '" + name + "': missing category '" + category + "'");
    }
    ordered.emplace_back(category, it->second);
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error("target '" + name + "': probabilities sum to " + detail::format_double(total) +
                ", expected 1");
  }
  return TargetSpec{TargetKind::Custom, std::move(name), std::move(ordered)};
}

TargetSpec parse_target(std::istream& in, std::span<const std::string> categories,
                        std::string name, const std::string& source_name) {
  std::vector<std::pair<std::string, std::size_t>> lines;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = detail::trim(detail::strip_cr(raw));
    if (!line.empty()) lines.emplace_back(std::string(line), line_no);
  }
  if (lines.empty()) throw Error(source_name + ": empty target specification");
  if (lines.size() == 1) {
    if (detail::iequals(lines[0].first, "uniform")) return TargetSpec::uniform();
    if (detail::iequals(lines[0].first, "population")) return TargetSpec::population();
  }
  std::vector<std::pair<std::string, double>> table;
  for (const auto& [line, no] : lines) {
    auto f = detail::split_whitespace(line);
    if (f.size() != 2) throw ParseError(source_name, no, "expected 'category<TAB>probability'");
    auto p = detail::parse_double(f[1]);
    if (!p) throw ParseError(source_name, no, "non-numeric probability '" + std::string(f[1]) + "'");
    table.emplace_back(std::string(f[0]), *p);
  }
  return TargetSpec::custom(std::move(name), std::move(table), categories);
}

TargetSpec target_from_argument(const std::string& argument,
                                std::span<const std::string> categories) {
  if (detail::iequals(argument, "uniform")) return TargetSpec::uniform();
  if (detail::iequals(argument, "population")) return TargetSpec::population();
  std::filesystem::path path(argument);
  auto in = open_input(path);
  return parse_target(in, categories, path.stem().string(), path.string());
}

}  // namespace fairdex
