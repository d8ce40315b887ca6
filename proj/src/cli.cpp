#include "fairdex/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "fairdex/corpus_io.hpp"
#include "fairdex/eval_engine.hpp"
#include "fairdex/kendall.hpp"
#include "fairdex/report_io.hpp"
#include "fairdex/synth.hpp"

namespace fairdex::cli {

namespace {

namespace fs = std::filesystem;

enum class OutputFormat { Csv, Json, Both };

OutputFormat parse_format(const std::string& text) {
  if (text == "csv") return OutputFormat::Csv;
  if (text == "json") return OutputFormat::Json;
  if (text == "both") return OutputFormat::Both;
  throw Error("format must be csv, json or both");
}

bool wants_csv(OutputFormat f) { return f != OutputFormat::Json; }
bool wants_json(OutputFormat f) { return f != OutputFormat::Csv; }

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Report files are rendered in memory first and only written once every
// computation has succeeded.
using PendingFiles = std::vector<std::pair<fs::path, std::string>>;

void write_all(const fs::path& dir, const PendingFiles& files) {
  fs::create_directories(dir);
  for (const auto& [name, content] : files) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + (dir / name).string());
    out << content;
  }
}

template <class Fn>
std::string render(Fn fn) {
  std::ostringstream ss;
  fn(ss);
  return ss.str();
}

std::string render_json(const ordered_json& j) { return j.dump(2) + "\n"; }

spdlog::level::level_enum level_from_env() {
  const char* value = std::getenv("FAIRDEX_LOG_LEVEL");
  if (!value || !*value) return spdlog::level::warn;
  return spdlog::level::from_str(value);
}

// Options shared by the subcommands that read a category source.
struct CategoryFlags {
  std::string categories;
  std::string prefix_rules;
  std::string grade_map;

  void add_to(CLI::App& app) {
    auto* a = app.add_option("--categories", categories, "TSV doc_id<TAB>category map")
                  ->check(CLI::ExistingFile);
    auto* b = app.add_option("--prefix-rules", prefix_rules, "ordered prefix<TAB>category rules")
                  ->check(CLI::ExistingFile);
    auto* c = app.add_option("--grade-map", grade_map, "qrels grade<TAB>category map")
                  ->check(CLI::ExistingFile);
    a->excludes(b)->excludes(c);
    b->excludes(c);
  }

  CategorySource load(CategoryOptions options, Diagnostics& diagnostics) const {
    if (!categories.empty()) {
      return read_category_source(CategoryMode::ExplicitFile, categories, options, &diagnostics);
    }
    if (!prefix_rules.empty()) {
      return read_category_source(CategoryMode::DocIdPrefixRules, prefix_rules, options);
    }
    if (!grade_map.empty()) {
      return read_category_source(CategoryMode::QrelsGradeMap, grade_map, options);
    }
    throw Error("one of --categories, --prefix-rules or --grade-map is required");
  }
};

struct EvalFlags {
  std::vector<std::string> runs;
  std::string runs_dir;
  std::string qrels;
  CategoryFlags category;
  std::string config_file;
  std::vector<std::string> targets;
  std::optional<std::string> cutoff;
  std::optional<int> threshold;
  std::optional<std::string> scope;
  std::optional<std::string> aggregation;
  std::vector<std::string> interpolations;
  bool lenient = false;
  bool include_unknown = false;
  bool raw_only = false;
  std::optional<std::string> q0;
  std::optional<std::size_t> top;
  std::optional<std::size_t> threads;
  std::string out_dir = ".";
  std::string format = "both";
};

struct BiasFlags {
  std::string qrels;
  CategoryFlags category;
  int threshold = 1;
  double scarcity = 0.05;
  bool lenient = false;
  bool include_unknown = false;
  std::string out_dir = ".";
  std::string format = "both";
};

struct CorrelateFlags {
  std::string leaderboard;
  std::string baseline = "r_prec";
  std::vector<std::string> metrics;
  std::vector<std::string> pairs;
  std::string out_dir = ".";
};

struct SynthFlags {
  std::string spec;
  std::uint64_t seed = 1;
  std::string out_dir;
};

// Effective evaluation settings: defaults, then the config file, then flags.
struct EvalSettings {
  EvalConfig config;
  std::vector<std::string> target_args{"uniform"};
  bool lenient = false;
  bool include_unknown = false;
  std::string q0 = "Q0";
};

EvalSettings resolve_settings(const EvalFlags& flags) {
  EvalSettings s;
  if (!flags.config_file.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text(flags.config_file));
    } catch (const nlohmann::json::exception& e) {
      throw Error(flags.config_file + ": invalid JSON: " + e.what());
    }
    if (!j.is_object()) throw Error(flags.config_file + ": config must be a JSON object");
    try {
      for (const auto& [key, value] : j.items()) {
        if (key == "cutoff") {
          s.config.cutoff = Cutoff::parse(value.is_string() ? value.get<std::string>()
                                                            : std::to_string(value.get<long long>()));
        } else if (key == "threshold") {
          s.config.relevance_threshold = value.get<int>();
        } else if (key == "scope") {
          s.config.results_scope = parse_results_scope(value.get<std::string>());
        } else if (key == "aggregation") {
          s.config.aggregation = parse_aggregation(value.get<std::string>());
        } else if (key == "targets") {
          s.target_args = value.get<std::vector<std::string>>();
        } else if (key == "interpolations") {
          s.config.interpolations.clear();
          for (const auto& label : value.get<std::vector<std::string>>()) {
            s.config.interpolations.push_back(Interpolation::parse(label));
          }
        } else if (key == "lenient") {
          s.lenient = value.get<bool>();
        } else if (key == "include_unknown") {
          s.include_unknown = value.get<bool>();
        } else if (key == "raw_only") {
          s.config.raw_only = value.get<bool>();
        } else if (key == "top") {
          s.config.leaderboard_size = value.get<std::size_t>();
        } else if (key == "threads") {
          s.config.threads = value.get<std::size_t>();
        } else if (key == "q0") {
          s.q0 = value.get<std::string>();
        } else {
          throw Error(flags.config_file + ": unknown config key '" + key + "'");
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(flags.config_file + ": " + e.what());
    }
  }

  if (flags.cutoff) s.config.cutoff = Cutoff::parse(*flags.cutoff);
  if (flags.threshold) s.config.relevance_threshold = *flags.threshold;
  if (flags.scope) s.config.results_scope = parse_results_scope(*flags.scope);
  if (flags.aggregation) s.config.aggregation = parse_aggregation(*flags.aggregation);
  if (!flags.targets.empty()) s.target_args = flags.targets;
  if (!flags.interpolations.empty()) {
    s.config.interpolations.clear();
    for (const auto& label : flags.interpolations) {
      s.config.interpolations.push_back(Interpolation::parse(label));
    }
  }
  if (flags.lenient) s.lenient = true;
  if (flags.include_unknown) s.include_unknown = true;
  if (flags.raw_only) s.config.raw_only = true;
  if (flags.q0) s.q0 = *flags.q0;
  if (flags.top) s.config.leaderboard_size = *flags.top;
  if (flags.threads) s.config.threads = *flags.threads;
  return s;
}

std::vector<fs::path> collect_run_files(const EvalFlags& flags) {
  std::vector<fs::path> files(flags.runs.begin(), flags.runs.end());
  if (!flags.runs_dir.empty()) {
    std::vector<fs::path> found;
    for (const auto& entry : fs::directory_iterator(flags.runs_dir)) {
      if (entry.is_regular_file()) found.push_back(entry.path());
    }
    std::sort(found.begin(), found.end());
    files.insert(files.end(), found.begin(), found.end());
  }
  if (files.empty()) throw Error("no run files given (use --run or --runs-dir)");
  return files;
}

void log_warnings(spdlog::logger& log, const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) log.warn(w);
}

int cmd_eval(const EvalFlags& flags, std::ostream& out, spdlog::logger& log) {
  const EvalSettings settings = resolve_settings(flags);
  const OutputFormat format = parse_format(flags.format);
  const CategoryOptions category_options{!settings.lenient, settings.include_unknown};
  ParseOptions parse_options;
  parse_options.strict = !settings.lenient;
  parse_options.q0_literal = settings.q0;

  Diagnostics diagnostics;
  const Qrels qrels = read_qrels_file(flags.qrels, parse_options, &diagnostics);
  const CategorySource source = flags.category.load(category_options, diagnostics);

  EvalConfig config = settings.config;
  config.targets.clear();
  for (const auto& arg : settings.target_args) {
    config.targets.push_back(target_from_argument(arg, source.categories()));
  }

  std::vector<Run> runs;
  for (const auto& path : collect_run_files(flags)) {
    runs.push_back(read_run_file(path, parse_options, &diagnostics));
  }
  log_warnings(log, diagnostics.warnings);
  log.info("evaluating {} run(s) over {} qrels topic(s)", runs.size(), qrels.judgments().size());

  const BatchReport report = evaluate_batch(runs, qrels, source, config);
  log_warnings(log, report.warnings);

  PendingFiles files;
  if (wants_csv(format)) {
    files.emplace_back("leaderboard.csv", render([&](std::ostream& o) { write_leaderboard_csv(o, report); }));
    files.emplace_back("topics.csv", render([&](std::ostream& o) { write_topics_csv(o, report); }));
  }
  if (wants_json(format)) {
    ordered_json j = leaderboard_json(report);
    j["config"]["lenient"] = settings.lenient;
    j["config"]["include_unknown"] = settings.include_unknown;
    j["config"]["q0"] = settings.q0;
    files.emplace_back("leaderboard.json", render_json(j));
  }
  write_all(flags.out_dir, files);

  for (const auto& [name, tags] : report.leaderboards) {
    out << name << ":";
    for (const auto& t : tags) out << ' ' << t;
    out << '\n';
  }
  for (const auto& c : report.correlations) {
    out << "tau(" << c.baseline << ", " << c.metric << ") = " << format_number(c.tau_b) << '\n';
  }
  return kSuccess;
}

int cmd_bias(const BiasFlags& flags, std::ostream& out, spdlog::logger& log) {
  const OutputFormat format = parse_format(flags.format);
  ParseOptions parse_options;
  parse_options.strict = !flags.lenient;
  Diagnostics diagnostics;
  const Qrels qrels = read_qrels_file(flags.qrels, parse_options, &diagnostics);
  const CategorySource source =
      flags.category.load(CategoryOptions{!flags.lenient, flags.include_unknown}, diagnostics);
  log_warnings(log, diagnostics.warnings);

  BiasOptions options;
  options.relevance_threshold = flags.threshold;
  options.scarcity_threshold = flags.scarcity;
  const BiasReport report = bias_report(qrels, source, source.categories(), options);
  log_warnings(log, report.warnings);

  PendingFiles files;
  if (wants_csv(format)) {
    files.emplace_back("bias_topics.csv", render([&](std::ostream& o) { write_bias_topics_csv(o, report); }));
  }
  if (wants_json(format)) {
    ordered_json j = bias_summary_json(report);
    j["config"]["lenient"] = flags.lenient;
    j["config"]["include_unknown"] = flags.include_unknown;
    files.emplace_back("bias_summary.json", render_json(j));
  }
  write_all(flags.out_dir, files);

  for (std::size_t i = 0; i < report.categories.size(); ++i) {
    out << report.categories[i] << '\t' << report.global_counts[i];
    if (report.global_proportions) out << '\t' << format_number((*report.global_proportions)[i]);
    out << '\n';
  }
  if (!report.scarce_categories.empty()) {
    out << "scarce:";
    for (const auto& c : report.scarce_categories) out << ' ' << c;
    out << '\n';
  }
  return kSuccess;
}

int cmd_correlate(const CorrelateFlags& flags, std::ostream& out) {
  std::ifstream in(flags.leaderboard, std::ios::binary);
  if (!in) throw Error("cannot open " + flags.leaderboard);
  const bool is_csv = fs::path(flags.leaderboard).extension() == ".csv";
  const LeaderboardTable table = is_csv ? read_leaderboard_csv(in, flags.leaderboard)
                                        : read_leaderboard_json(in, flags.leaderboard);

  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& m : flags.metrics) pairs.emplace_back(flags.baseline, m);
  for (const auto& p : flags.pairs) {
    auto colon = p.find(':');
    if (colon == std::string::npos) throw Error("pair '" + p + "' must look like metric_a:metric_b");
    pairs.emplace_back(p.substr(0, colon), p.substr(colon + 1));
  }
  if (pairs.empty()) {
    for (const auto& c : table.columns) {
      if (c.starts_with("fair_") || c.starts_with("mean") || c.starts_with("gmean")) {
        pairs.emplace_back(flags.baseline, c);
      }
    }
  }
  if (pairs.empty()) throw Error("leaderboard has no fairness or combined columns to correlate");
  for (const auto& [a, b] : pairs) {
    if (!table.has_column(a)) throw Error("unknown metric '" + a + "'");
    if (!table.has_column(b)) throw Error("unknown metric '" + b + "'");
  }
  if (table.tags.size() < 2) throw Error("need at least two systems to correlate");

  std::ostringstream csv;
  write_csv_row(csv, {"pair", "metric_a", "metric_b", "tau_b", "n_systems"});
  for (const auto& [a, b] : pairs) {
    const double tau = kendall_tau_b(table.column(a), table.column(b));
    write_csv_row(csv, {a + "~" + b, a, b, format_number(tau), std::to_string(table.tags.size())});
    out << "tau(" << a << ", " << b << ") = " << format_number(tau) << '\n';
  }
  write_all(flags.out_dir, {{"tau.csv", csv.str()}});
  return kSuccess;
}

int cmd_synth(const SynthFlags& flags, std::ostream& out) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(flags.spec));
  } catch (const nlohmann::json::exception& e) {
    throw Error(flags.spec + ": invalid JSON: " + e.what());
  }
  const SynthSpec spec = parse_synth_spec(j);
  materialize(spec, flags.seed, flags.out_dir);
  out << "wrote " << spec.n_topics << " topic(s) and " << spec.systems.size() << " run(s) to "
      << flags.out_dir << '\n';
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  spdlog::logger log("fairdex", sink);
  log.set_pattern("%l: %v");
  log.set_level(level_from_env());

  CLI::App app{"Fairness-aware evaluation of ranked retrieval runs", "fairdex"};
  app.require_subcommand(1);

  EvalFlags eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score runs on relevance and distributional fairness");
  eval_cmd->add_option("--run", eval.runs, "run file (repeatable)")->check(CLI::ExistingFile);
  eval_cmd->add_option("--runs-dir", eval.runs_dir, "directory of run files")->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--qrels", eval.qrels, "qrels file")->required()->check(CLI::ExistingFile);
  eval.category.add_to(*eval_cmd);
  eval_cmd->add_option("--config", eval.config_file, "JSON config (flags take precedence)")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--target", eval.targets,
                       "uniform, population, or a category<TAB>probability file (repeatable)");
  eval_cmd->add_option("--cutoff", eval.cutoff, "results depth: k, R, or all (default 100)");
  eval_cmd->add_option("--threshold", eval.threshold, "minimum relevant grade (default 1)");
  eval_cmd->add_option("--scope", eval.scope, "all | relevant (default all)");
  eval_cmd->add_option("--aggregation", eval.aggregation, "mean | pooled (default mean)");
  eval_cmd->add_option("--interp", eval.interpolations, "mean | gmean, optionally :weight (repeatable)");
  eval_cmd->add_flag("--lenient", eval.lenient, "tolerate malformed or unmapped input with warnings");
  eval_cmd->add_flag("--include-unknown", eval.include_unknown,
                     "count unmapped docs as __unknown__ (lenient mode)");
  eval_cmd->add_flag("--raw-only", eval.raw_only, "skip cross-system normalization");
  eval_cmd->add_option("--q0", eval.q0, "expected second run column (default Q0)");
  eval_cmd->add_option("--top", eval.top, "leaderboard length (default 3)");
  eval_cmd->add_option("--threads", eval.threads, "worker threads (0 = all cores)");
  eval_cmd->add_option("--out", eval.out_dir, "output directory");
  eval_cmd->add_option("--format", eval.format, "csv | json | both")
      ->check(CLI::IsMember({"csv", "json", "both"}));

  BiasFlags bias;
  auto* bias_cmd = app.add_subcommand("bias", "Audit relevant-document category balance per topic");
  bias_cmd->add_option("--qrels", bias.qrels, "qrels file")->required()->check(CLI::ExistingFile);
  bias.category.add_to(*bias_cmd);
  bias_cmd->add_option("--threshold", bias.threshold, "minimum relevant grade");
  bias_cmd->add_option("--scarcity", bias.scarcity, "flag categories below this global share");
  bias_cmd->add_flag("--lenient", bias.lenient, "tolerate malformed or unmapped input with warnings");
  bias_cmd->add_flag("--include-unknown", bias.include_unknown, "count unmapped docs as __unknown__ (lenient mode)");
  bias_cmd->add_option("--out", bias.out_dir, "output directory");
  bias_cmd->add_option("--format", bias.format, "csv | json | both")
      ->check(CLI::IsMember({"csv", "json", "both"}));

  CorrelateFlags corr;
  auto* corr_cmd = app.add_subcommand("correlate", "Kendall's tau-b between leaderboard metrics");
  corr_cmd->add_option("--leaderboard", corr.leaderboard, "leaderboard.json or leaderboard.csv")
      ->required()
      ->check(CLI::ExistingFile);
  corr_cmd->add_option("--baseline", corr.baseline, "baseline metric (default r_prec)");
  corr_cmd->add_option("--metric", corr.metrics, "metric compared against the baseline (repeatable)");
  corr_cmd->add_option("--pair", corr.pairs, "explicit metric_a:metric_b pair (repeatable)");
  corr_cmd->add_option("--out", corr.out_dir, "output directory");

  SynthFlags synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a seeded synthetic collection and runs");
  synth_cmd->add_option("--spec", synth.spec, "JSON spec")->required()->check(CLI::ExistingFile);
  synth_cmd->add_option("--seed", synth.seed, "generator seed (default 1)");
  synth_cmd->add_option("--out", synth.out_dir, "output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  try {
    if (*eval_cmd) return cmd_eval(eval, out, log);
    if (*bias_cmd) return cmd_bias(bias, out, log);
    if (*corr_cmd) return cmd_correlate(corr, out);
    if (*synth_cmd) return cmd_synth(synth, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
  return kInternalError;
}

}  // namespace fairdex::cli
