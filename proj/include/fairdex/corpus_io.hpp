#pragma once

// Readers and writers for the TREC-style inputs: runs, qrels, category maps
// and target distribution files.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "fairdex/errors.hpp"

namespace fairdex {

using DocSet = std::unordered_set<std::string>;

struct ParseOptions {
  bool strict = true;
  // Expected second column of a run line, compared case-insensitively.
  // Lenient parsing accepts any value there.
  std::string q0_literal = "Q0";
  // Name used in error messages (usually the file path).
  std::string source_name = "<input>";
};

struct RunEntry {
  std::string topic_id;
  std::string doc_id;
  int rank = 0;
  double score = 0.0;
  std::string system_tag;

  bool operator==(const RunEntry&) const = default;
};

/// One system's ranked output. Per topic, entries are ordered by score
/// descending with ties broken by doc_id ascending, and ranks read 1..n.
struct Run {
  std::string system_tag;
  std::map<std::string, std::vector<RunEntry>> topics;

  std::vector<std::string> ranked_docs(const std::string& topic_id) const;
  std::size_t size() const;

  bool operator==(const Run&) const = default;
};

/// Sorts every topic list into canonical order and rewrites ranks 1..n.
void canonicalize(Run& run);

Run parse_run(std::istream& in, const ParseOptions& options = {},
              Diagnostics* diagnostics = nullptr);
Run read_run_file(const std::filesystem::path& path, ParseOptions options = {},
                  Diagnostics* diagnostics = nullptr);
void write_run(std::ostream& out, const Run& run);

class Qrels {
 public:
  using TopicJudgments = std::map<std::string, int>;

  Qrels() = default;
  /// Throws Error on a negative grade.
  explicit Qrels(std::map<std::string, TopicJudgments> judgments);

  std::optional<int> grade(std::string_view topic_id, std::string_view doc_id) const;
  /// Documents with grade >= threshold.
  DocSet relevant_docs(const std::string& topic_id, int threshold = 1) const;
  std::size_t relevant_count(const std::string& topic_id, int threshold = 1) const;

  const std::map<std::string, TopicJudgments>& judgments() const noexcept { return judgments_; }
  std::vector<std::string> topics() const;
  std::size_t size() const;
  bool empty() const noexcept { return judgments_.empty(); }

  bool operator==(const Qrels&) const = default;

 private:
  std::map<std::string, TopicJudgments> judgments_;
};

Qrels parse_qrels(std::istream& in, const ParseOptions& options = {},
                  Diagnostics* diagnostics = nullptr);
Qrels read_qrels_file(const std::filesystem::path& path, ParseOptions options = {},
                      Diagnostics* diagnostics = nullptr);
void write_qrels(std::ostream& out, const Qrels& qrels);

// ---------------------------------------------------------------------------
// Categories

inline constexpr std::string_view kUnknownCategory = "__unknown__";

enum class CategoryMode { ExplicitFile, QrelsGradeMap, DocIdPrefixRules };

struct CategoryOptions {
  bool strict = true;
  // Lenient mode only: count unmapped docs in the reserved "__unknown__"
  // category instead of dropping them.
  bool include_unknown = false;
};

/// Where document categories come from. Immutable once built; safe to share
/// between evaluation threads.
class CategorySource {
 public:
  using Table = std::vector<std::pair<std::string, std::string>>;

  /// doc_id -> category. Duplicate doc ids are an error unless `options` is
  /// lenient, in which case the first mapping wins.
  static CategorySource explicit_map(Table doc_to_category, CategoryOptions options = {},
                                     Diagnostics* diagnostics = nullptr);
  /// qrels grade -> category.
  static CategorySource grade_map(std::vector<std::pair<int, std::string>> grade_to_category,
                                  CategoryOptions options = {});
  /// Ordered prefix -> category rules. No prefix may be a prefix of another,
  /// so at most one rule matches any doc id.
  static CategorySource prefix_rules(Table prefix_to_category, CategoryOptions options = {});

  CategoryMode mode() const noexcept { return mode_; }
  const CategoryOptions& options() const noexcept { return options_; }

  /// Evaluation category set in first-appearance order, with "__unknown__"
  /// appended when it participates.
  const std::vector<std::string>& categories() const noexcept { return categories_; }

  /// Raw lookup; nullopt when the source has no mapping for the doc.
  std::optional<std::string_view> lookup(std::string_view doc_id, std::string_view topic_id,
                                         const Qrels& qrels) const;

  /// Grade-map invariant: every judged grade >= threshold must be mapped.
  void validate_against(const Qrels& qrels, int relevance_threshold) const;

  const Table& doc_table() const noexcept { return doc_table_; }
  const std::vector<std::pair<int, std::string>>& grade_table() const noexcept {
    return grade_table_;
  }
  const Table& prefix_table() const noexcept { return prefix_table_; }

  bool operator==(const CategorySource& other) const;

 private:
  CategorySource(CategoryMode mode, CategoryOptions options) : mode_(mode), options_(options) {}
  void add_category(const std::string& label);
  void finish();

  CategoryMode mode_;
  CategoryOptions options_;
  std::vector<std::string> categories_;
  Table doc_table_;
  std::unordered_map<std::string, std::string> doc_index_;
  std::vector<std::pair<int, std::string>> grade_table_;
  Table prefix_table_;
};

/// Category of `doc_id` in `topic_id`. Strict sources throw
/// UnmappedDocumentsError for unmapped docs; lenient ones return
/// kUnknownCategory and record the doc in `diagnostics`.
std::string resolve_category(std::string_view doc_id, std::string_view topic_id,
                             const CategorySource& source, const Qrels& qrels,
                             Diagnostics* diagnostics = nullptr);

CategorySource parse_category_map(std::istream& in, CategoryOptions options = {},
                                  const std::string& source_name = "<categories>",
                                  Diagnostics* diagnostics = nullptr);
CategorySource parse_grade_map(std::istream& in, CategoryOptions options = {},
                               const std::string& source_name = "<grade-map>");
CategorySource parse_prefix_rules(std::istream& in, CategoryOptions options = {},
                                  const std::string& source_name = "<prefix-rules>");

CategorySource read_category_source(CategoryMode mode, const std::filesystem::path& path,
                                    CategoryOptions options = {},
                                    Diagnostics* diagnostics = nullptr);

/// Writes the source's table in the TSV format of its mode.
void write_category_source(std::ostream& out, const CategorySource& source);

// ---------------------------------------------------------------------------
// Targets

enum class TargetKind { Uniform, Population, Custom };

struct TargetSpec {
  TargetKind kind = TargetKind::Uniform;
  std::string name = "uniform";
  // Custom only; same order as the category set it was validated against.
  std::vector<std::pair<std::string, double>> table;

  static TargetSpec uniform() { return {TargetKind::Uniform, "uniform", {}}; }
  static TargetSpec population() { return {TargetKind::Population, "population", {}}; }
  /// Throws Error unless the table covers exactly `categories`, every
  /// probability is positive, and the total is 1 within 1e-9.
  static TargetSpec custom(std::string name, std::vector<std::pair<std::string, double>> table,
                           std::span<const std::string> categories);

  bool operator==(const TargetSpec&) const = default;
};

/// Either a single keyword line ("uniform" / "population") or
/// "category<TAB>probability" lines.
TargetSpec parse_target(std::istream& in, std::span<const std::string> categories,
                        std::string name = "custom",
                        const std::string& source_name = "<target>");

/// Interprets a CLI/config target argument: a keyword or a path to a target file
/// (the target is then named after the file stem).
TargetSpec target_from_argument(const std::string& argument,
                                std::span<const std::string> categories);

/// Labels used as categories, tags or target names must be non-empty and
/// free of whitespace and commas.
bool is_valid_label(std::string_view label);

}  // namespace fairdex
