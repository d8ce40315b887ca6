#pragma once

// CSV and JSON serialization of evaluation and bias reports.
//
// JSON documents carry "schema": "fairdex/1". Leaderboard CSV columns are, in
// order: tag, r_prec, n_r_prec, and for every target kl_<t>, fair_<t>,
// followed by one <interpolation>_<t> column per configured interpolation
// (mean_<t>, gmean_<t> by default).

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairdex/eval_engine.hpp"

namespace fairdex {

inline constexpr const char* kSchemaVersion = "fairdex/1";

using ordered_json = nlohmann::ordered_json;

// --- generic CSV ----------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws Error if absent.
  std::size_t column(const std::string& name) const;
};

/// RFC 4180 subset: comma separated, double-quote escaping, LF line ends.
CsvTable read_csv(std::istream& in, const std::string& source_name = "<csv>");
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

// --- evaluation reports ---------------------------------------------------

ordered_json to_json(const EvalConfig& config);

void write_leaderboard_csv(std::ostream& out, const BatchReport& report);
/// One row per (system, topic): tag, topic, relevant, depth, r_prec,
/// count_<category>..., kl_<target>...
void write_topics_csv(std::ostream& out, const BatchReport& report);
ordered_json leaderboard_json(const BatchReport& report);

/// Metric table as read back from a leaderboard file.
struct LeaderboardTable {
  std::vector<std::string> columns;  // metric columns, without "tag"
  std::vector<std::string> tags;
  std::vector<std::vector<double>> values;  // values[system][column]

  std::vector<double> column(const std::string& name) const;
  bool has_column(const std::string& name) const;
};

LeaderboardTable read_leaderboard_csv(std::istream& in, const std::string& source_name = "<csv>");
LeaderboardTable read_leaderboard_json(std::istream& in, const std::string& source_name = "<json>");

// --- bias reports ---------------------------------------------------------

/// Long format, one row per (topic, category):
/// topic, category, count, proportion, empty_topic.
void write_bias_topics_csv(std::ostream& out, const BiasReport& report);
ordered_json bias_summary_json(const BiasReport& report);

/// Shortest round-trip decimal form used for every number written to CSV.
std::string format_number(double value);

}  // namespace fairdex
