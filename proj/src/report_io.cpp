#include "fairdex/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "text_util.hpp"

namespace fairdex {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  return detail::format_double(value);
}

// ---------------------------------------------------------------------------
// CSV

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw Error("CSV has no column '" + name + "'");
}

CsvTable read_csv(std::istream& in, const std::string& source_name) {
  CsvTable table;
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool row_has_content = false;
  std::size_t line = 1;

  auto end_row = [&] {
    row.push_back(std::move(field));
    field.clear();
    if (table.header.empty()) {
      table.header = std::move(row);
    } else {
      if (row.size() != table.header.size()) {
        throw ParseError(source_name, line,
                         "expected " + std::to_string(table.header.size()) + " fields, got " +
                             std::to_string(row.size()));
      }
      table.rows.push_back(std::move(row));
    }
    row.clear();
    row_has_content = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        row_has_content = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        row_has_content = true;
        break;
      case '\r':
        break;
      case '\n':
        if (row_has_content || !field.empty()) end_row();
        ++line;
        break;
      default:
        field += c;
        row_has_content = true;
    }
  }
  if (quoted) throw ParseError(source_name, line, "unterminated quoted field");
  if (row_has_content || !field.empty()) end_row();
  if (table.header.empty()) throw Error(source_name + ": empty CSV");
  return table;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    const auto& f = fields[i];
    if (f.find_first_of(",\"\n\r") == std::string::npos) {
      out << f;
      continue;
    }
    out << '"';
    for (char c : f) {
      if (c == '"') out << '"';
      out << c;
    }
    out << '"';
  }
  out << '\n';
}

// ---------------------------------------------------------------------------
// Evaluation reports

ordered_json to_json(const EvalConfig& config) {
  ordered_json j;
  j["cutoff"] = config.cutoff.label();
  j["relevance_threshold"] = config.relevance_threshold;
  j["results_scope"] = to_string(config.results_scope);
  j["aggregation"] = to_string(config.aggregation);
  ordered_json targets = ordered_json::array();
  for (const auto& t : config.targets) {
    ordered_json tj;
    tj["name"] = t.name;
    tj["kind"] = t.kind == TargetKind::Uniform      ? "uniform"
                 : t.kind == TargetKind::Population ? "population"
                                                    : "custom";
    if (t.kind == TargetKind::Custom) {
      ordered_json table = ordered_json::object();
      for (const auto& [category, p] : t.table) table[category] = p;
      tj["table"] = table;
    }
    targets.push_back(tj);
  }
  j["targets"] = targets;
  ordered_json interps = ordered_json::array();
  for (const auto& i : config.interpolations) {
    interps.push_back({{"label", i.label()},
                       {"kind", i.kind == InterpolationKind::ArithmeticMean ? "mean" : "gmean"},
                       {"weight", i.weight}});
  }
  j["interpolations"] = interps;
  j["raw_only"] = config.raw_only;
  j["leaderboard_size"] = config.leaderboard_size;
  return j;
}

void write_leaderboard_csv(std::ostream& out, const BatchReport& report) {
  write_csv_row(out, report.columns);
  for (const auto& s : report.systems) {
    std::vector<std::string> row{s.system_tag};
    for (std::size_t c = 1; c < report.columns.size(); ++c) {
      row.push_back(format_number(s.metric(report.columns[c])));
    }
    write_csv_row(out, row);
  }
}

void write_topics_csv(std::ostream& out, const BatchReport& report) {
  std::vector<std::string> header{"tag", "topic", "relevant", "depth", "r_prec"};
  for (const auto& c : report.categories) header.push_back("count_" + c);
  for (const auto& t : report.targets) header.push_back("kl_" + t.name);
  write_csv_row(out, header);
  for (const auto& s : report.systems) {
    for (const auto& t : s.topics) {
      std::vector<std::string> row{s.system_tag, t.topic_id, std::to_string(t.relevant),
                                   std::to_string(t.depth), format_number(t.r_precision)};
      for (auto count : t.result_counts) row.push_back(std::to_string(count));
      for (const auto& target : report.targets) {
        row.push_back(format_number(t.kl_by_target.at(target.name)));
      }
      write_csv_row(out, row);
    }
  }
}

namespace {

ordered_json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

ordered_json distribution_json(const CategoricalDistribution& d) {
  ordered_json j = ordered_json::object();
  for (std::size_t i = 0; i < d.size(); ++i) j[d.categories()[i]] = d[i];
  return j;
}

}  // namespace

ordered_json leaderboard_json(const BatchReport& report) {
  ordered_json j;
  j["schema"] = kSchemaVersion;
  j["kind"] = "leaderboard";
  ordered_json members = ordered_json::array();
  std::vector<std::string> tags;
  for (const auto& s : report.systems) tags.push_back(s.system_tag);
  std::sort(tags.begin(), tags.end());
  for (const auto& t : tags) members.push_back(t);
  j["batch"] = {{"systems", members}, {"hash", report.batch_hash}};
  j["config"] = to_json(report.config);
  j["categories"] = report.categories;
  ordered_json targets = ordered_json::object();
  for (const auto& t : report.targets) targets[t.name] = distribution_json(t.distribution);
  j["targets"] = targets;
  j["columns"] = report.columns;

  ordered_json systems = ordered_json::array();
  for (const auto& s : report.systems) {
    ordered_json sj;
    sj["tag"] = s.system_tag;
    ordered_json metrics = ordered_json::object();
    for (std::size_t c = 1; c < report.columns.size(); ++c) {
      metrics[report.columns[c]] = number_or_null(s.metric(report.columns[c]));
    }
    sj["metrics"] = metrics;
    sj["evaluated_topics"] = s.topics.size();
    sj["skipped_topics"] = s.skipped_topics;
    ordered_json topics = ordered_json::array();
    for (const auto& t : s.topics) {
      ordered_json tj;
      tj["topic"] = t.topic_id;
      tj["relevant"] = t.relevant;
      tj["depth"] = t.depth;
      tj["r_prec"] = t.r_precision;
      tj["counts"] = t.result_counts;
      ordered_json kl = ordered_json::object();
      for (const auto& target : report.targets) kl[target.name] = t.kl_by_target.at(target.name);
      tj["kl"] = kl;
      topics.push_back(tj);
    }
    sj["topics"] = topics;
    systems.push_back(sj);
  }
  j["systems"] = systems;

  ordered_json boards = ordered_json::object();
  for (const auto& name : report.columns) {
    if (auto it = report.leaderboards.find(name); it != report.leaderboards.end()) {
      boards[name] = it->second;
    }
  }
  j["leaderboards"] = boards;

  ordered_json correlations = ordered_json::array();
  for (const auto& c : report.correlations) {
    correlations.push_back({{"baseline", c.baseline},
                            {"metric", c.metric},
                            {"tau_b", number_or_null(c.tau_b)},
                            {"n_systems", c.n_systems}});
  }
  j["rank_correlations"] = correlations;
  j["unknown_category_docs"] = report.unknown_category_docs;
  j["warnings"] = report.warnings;
  return j;
}

std::vector<double> LeaderboardTable::column(const std::string& name) const {
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c] != name) continue;
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& row : values) out.push_back(row[c]);
    return out;
  }
  throw Error("unknown metric '" + name + "'");
}

bool LeaderboardTable::has_column(const std::string& name) const {
  return std::find(columns.begin(), columns.end(), name) != columns.end();
}

LeaderboardTable read_leaderboard_csv(std::istream& in, const std::string& source_name) {
  auto csv = read_csv(in, source_name);
  if (csv.header.empty() || csv.header.front() != "tag") {
    throw Error(source_name + ": leaderboard must start with a 'tag' column");
  }
  LeaderboardTable table;
  table.columns.assign(csv.header.begin() + 1, csv.header.end());
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    table.tags.push_back(row.front());
    std::vector<double> values;
    for (std::size_t c = 1; c < row.size(); ++c) {
      auto v = detail::parse_double(row[c]);
      if (!v) throw ParseError(source_name, r + 2, "non-numeric value '" + row[c] + "'");
      values.push_back(*v);
    }
    table.values.push_back(std::move(values));
  }
  return table;
}

LeaderboardTable read_leaderboard_json(std::istream& in, const std::string& source_name) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(source_name + ": invalid JSON: " + e.what());
  }
  if (!j.is_object() || j.value("schema", "") != kSchemaVersion) {
    throw Error(source_name + ": not a " + std::string(kSchemaVersion) + " document");
  }
  if (!j.contains("columns") || !j.contains("systems")) {
    throw Error(source_name + ": leaderboard needs 'columns' and 'systems'");
  }
  LeaderboardTable table;
  try {
    for (const auto& c : j.at("columns")) {
      auto name = c.get<std::string>();
      if (name != "tag") table.columns.push_back(name);
    }
    for (const auto& s : j.at("systems")) {
      table.tags.push_back(s.at("tag").get<std::string>());
      const auto& metrics = s.at("metrics");
      std::vector<double> values;
      for (const auto& c : table.columns) {
        const auto& v = metrics.at(c);
        values.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>());
      }
      table.values.push_back(std::move(values));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(source_name + ": malformed leaderboard: " + e.what());
  }
  return table;
}

// ---------------------------------------------------------------------------
// Bias reports

void write_bias_topics_csv(std::ostream& out, const BiasReport& report) {
  write_csv_row(out, {"topic", "category", "count", "proportion", "empty_topic"});
  for (const auto& [topic, counts] : report.per_topic_counts) {
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      const double share =
          total ? static_cast<double>(counts[i]) / static_cast<double>(total) : 0.0;
      write_csv_row(out, {topic, report.categories[i], std::to_string(counts[i]),
                          format_number(share), total ? "0" : "1"});
    }
  }
}

ordered_json bias_summary_json(const BiasReport& report) {
  ordered_json j;
  j["schema"] = kSchemaVersion;
  j["kind"] = "bias_summary";
  j["config"] = {{"relevance_threshold", report.options.relevance_threshold},
                 {"scarcity_threshold", report.options.scarcity_threshold}};
  j["categories"] = report.categories;
  j["n_topics"] = report.per_topic_counts.size();
  j["total_relevant"] = report.total_relevant();
  ordered_json counts = ordered_json::object();
  for (std::size_t i = 0; i < report.categories.size(); ++i) {
    counts[report.categories[i]] = report.global_counts[i];
  }
  j["global_counts"] = counts;
  j["global_proportions"] =
      report.global_proportions ? distribution_json(*report.global_proportions) : ordered_json();
  j["smoothed_proportions"] =
      report.smoothed_proportions ? distribution_json(*report.smoothed_proportions) : ordered_json();
  j["scarce_categories"] = report.scarce_categories;
  j["empty_topics"] = report.empty_topics;
  j["warnings"] = report.warnings;
  return j;
}

}  // namespace fairdex
