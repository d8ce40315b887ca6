#pragma once

// Batch evaluation: per-topic scoring, aggregation over topics, cross-system
// normalization, leaderboards, rank correlations and collection bias audits.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairdex/corpus_io.hpp"
#include "fairdex/distribution.hpp"
#include "fairdex/metrics.hpp"

namespace fairdex {

/// How deep into each ranking the results distribution is read.
struct Cutoff {
  enum class Mode { Fixed, ByTopicR, FullRun };
  Mode mode = Mode::Fixed;
  std::size_t k = 100;

  static Cutoff fixed(std::size_t k) { return {Mode::Fixed, k}; }
  static Cutoff by_topic_r() { return {Mode::ByTopicR, 0}; }
  static Cutoff full_run() { return {Mode::FullRun, 0}; }

  /// "100", "R" or "all".
  std::string label() const;
  static Cutoff parse(const std::string& text);

  bool operator==(const Cutoff&) const = default;
};

enum class ResultsScope { AllRetrieved, RelevantRetrievedOnly };
enum class Aggregation { PerTopicMeanKL, PooledCounts };

struct EvalConfig {
  Cutoff cutoff;
  int relevance_threshold = 1;
  ResultsScope results_scope = ResultsScope::AllRetrieved;
  std::vector<TargetSpec> targets{TargetSpec::uniform()};
  std::vector<Interpolation> interpolations{Interpolation::mean(), Interpolation::gmean()};
  Aggregation aggregation = Aggregation::PerTopicMeanKL;
  // Skip cross-system normalization; required for a batch of one run.
  bool raw_only = false;
  // Length of each per-metric leaderboard in the report.
  std::size_t leaderboard_size = 3;
  // 0 = one worker per hardware thread.
  std::size_t threads = 0;

  /// Throws Error on an inconsistent configuration.
  void validate() const;
};

std::string to_string(ResultsScope scope);
std::string to_string(Aggregation aggregation);
ResultsScope parse_results_scope(const std::string& text);
Aggregation parse_aggregation(const std::string& text);

struct NamedDistribution {
  std::string name;
  CategoricalDistribution distribution;
};

/// Everything the scorers share. Read-only once built.
struct EvalContext {
  const Qrels& qrels;
  const CategorySource& source;
  const EvalConfig& config;
  std::vector<std::string> categories;
  std::vector<NamedDistribution> targets;
};

/// Validates the config and the source against the qrels, then resolves every
/// target to a concrete distribution.
EvalContext make_context(const Qrels& qrels, const CategorySource& source, const EvalConfig& config,
                         Diagnostics* diagnostics = nullptr);

/// Smoothed category distribution of all relevant documents pooled over all
/// topics.
CategoricalDistribution derive_population_target(const Qrels& qrels, const CategorySource& source,
                                                 std::span<const std::string> categories,
                                                 int relevance_threshold = 1,
                                                 Diagnostics* diagnostics = nullptr);

struct TopicScore {
  std::string topic_id;
  std::size_t relevant = 0;  // R
  std::size_t depth = 0;     // documents read for the results distribution
  double r_precision = 0.0;
  std::vector<std::uint64_t> result_counts;  // parallel to EvalContext::categories
  std::map<std::string, double> kl_by_target;
};

/// Scores one topic of one run; nullopt when the topic has no relevant documents.
std::optional<TopicScore> score_topic(const EvalContext& ctx, const std::string& topic_id,
                                      std::span<const RunEntry> ranking,
                                      Diagnostics* diagnostics = nullptr);

struct SystemScore {
  std::string system_tag;
  double mean_r_precision = 0.0;
  std::map<std::string, double> mean_kl_by_target;
  // "n_r_prec" and "fair_<target>"; filled by evaluate_batch.
  std::map<std::string, double> normalized;
  // "<interpolation>_<target>"; filled by evaluate_batch.
  std::map<std::string, double> combined;
  std::vector<TopicScore> topics;
  std::vector<std::string> skipped_topics;  // retrieved, but no relevant documents

  /// Value of a report column ("r_prec", "n_r_prec", "kl_<t>", "fair_<t>",
  /// "<interp>_<t>"). Throws Error for an unknown column.
  double metric(const std::string& column) const;
};

/// Raw (pre-normalization) scores of one run.
SystemScore score_system(const EvalContext& ctx, const Run& run,
                         Diagnostics* diagnostics = nullptr);

struct RankCorrelation {
  std::string baseline;
  std::string metric;
  double tau_b = 0.0;
  std::size_t n_systems = 0;
};

struct BatchReport {
  EvalConfig config;
  std::vector<std::string> categories;
  std::vector<NamedDistribution> targets;
  // Column order: tag, r_prec, n_r_prec, then per target kl_, fair_ and one
  // column per interpolation. Normalized columns are absent in raw-only mode.
  std::vector<std::string> columns;
  // Ordered by raw R-Precision descending, tag ascending.
  std::vector<SystemScore> systems;
  // Metric column -> tags ordered best first (score desc, tag asc), truncated
  // to config.leaderboard_size.
  std::map<std::string, std::vector<std::string>> leaderboards;
  // Raw R-Precision ranking against every fairness and combined column.
  std::vector<RankCorrelation> correlations;
  std::string batch_hash;  // FNV-1a 64 over the sorted member tags
  std::vector<std::string> warnings;
  std::size_t unknown_category_docs = 0;

  bool raw_only() const noexcept { return config.raw_only; }
  const SystemScore& system(const std::string& tag) const;
};

/// Scores every run, then normalizes across exactly this batch of systems.
BatchReport evaluate_batch(std::span<const Run> runs, const Qrels& qrels,
                           const CategorySource& source, const EvalConfig& config);

/// Strict-mode pre-flight: every document the evaluation would categorize,
/// sorted and de-duplicated, that the source cannot map.
std::vector<std::string> find_unmapped_docs(const EvalContext& ctx, std::span<const Run> runs);

std::string batch_membership_hash(std::vector<std::string> tags);

// ---------------------------------------------------------------------------
// Collection bias

struct BiasOptions {
  int relevance_threshold = 1;
  // Categories whose global share of relevant documents is below this are flagged.
  double scarcity_threshold = 0.05;
};

struct BiasReport {
  std::vector<std::string> categories;
  // topic -> counts parallel to `categories`; every qrels topic has a row.
  std::map<std::string, std::vector<std::uint64_t>> per_topic_counts;
  std::vector<std::uint64_t> global_counts;
  // Unsmoothed shares; nullopt when there are no relevant documents at all.
  std::optional<CategoricalDistribution> global_proportions;
  std::optional<CategoricalDistribution> smoothed_proportions;
  std::vector<std::string> scarce_categories;
  std::vector<std::string> empty_topics;
  BiasOptions options;
  std::vector<std::string> warnings;

  std::uint64_t total_relevant() const;
};

BiasReport bias_report(const Qrels& qrels, const CategorySource& source,
                       std::span<const std::string> categories, const BiasOptions& options = {});

}  // namespace fairdex
