#include "fairdex/eval_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <set>
#include <thread>

#include "fairdex/kendall.hpp"
#include "text_util.hpp"

namespace fairdex {

namespace {

std::optional<std::size_t> index_of(std::span<const std::string> categories,
                                    std::string_view label) {
  auto it = std::find(categories.begin(), categories.end(), label);
  if (it == categories.end()) return std::nullopt;
  return static_cast<std::size_t>(it - categories.begin());
}

std::size_t results_depth(const Cutoff& cutoff, std::size_t relevant, std::size_t retrieved) {
  switch (cutoff.mode) {
    case Cutoff::Mode::Fixed:
      return std::min(cutoff.k, retrieved);
    case Cutoff::Mode::ByTopicR:
      return std::min(relevant, retrieved);
    case Cutoff::Mode::FullRun:
      return retrieved;
  }
  return retrieved;
}

bool has_population_target(const EvalConfig& config) {
  return std::any_of(config.targets.begin(), config.targets.end(),
                     [](const TargetSpec& t) { return t.kind == TargetKind::Population; });
}

// Runs body(i) for i in [0, n) on up to `threads` workers. The first failing
// index (lowest i) is rethrown, independent of scheduling.
template <class Body>
void parallel_for(std::size_t n, std::size_t threads, Body body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  std::vector<std::exception_ptr> errors(n);
  auto run_one = [&](std::size_t i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) run_one(i);
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

bool better(double a, const std::string& tag_a, double b, const std::string& tag_b) {
  if (a != b) return a > b;
  return tag_a < tag_b;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

std::string Cutoff::label() const {
  switch (mode) {
    case Mode::Fixed:
      return std::to_string(k);
    case Mode::ByTopicR:
      return "R";
    case Mode::FullRun:
      return "all";
  }
  return "?";
}

Cutoff Cutoff::parse(const std::string& text) {
  if (text == "R" || text == "r") return by_topic_r();
  if (text == "all") return full_run();
  auto k = detail::parse_int<std::size_t>(text);
  if (!k || *k == 0) throw Error("cutoff must be a positive integer, 'R' or 'all', got '" + text + "'");
  return fixed(*k);
}

std::string to_string(ResultsScope scope) {
  return scope == ResultsScope::AllRetrieved ? "all" : "relevant";
}

std::string to_string(Aggregation aggregation) {
  return aggregation == Aggregation::PerTopicMeanKL ? "mean" : "pooled";
}

ResultsScope parse_results_scope(const std::string& text) {
  if (text == "all") return ResultsScope::AllRetrieved;
  if (text == "relevant") return ResultsScope::RelevantRetrievedOnly;
  throw Error("results scope must be 'all' or 'relevant', got '" + text + "'");
}

Aggregation parse_aggregation(const std::string& text) {
  if (text == "mean") return Aggregation::PerTopicMeanKL;
  if (text == "pooled") return Aggregation::PooledCounts;
  throw Error("aggregation must be 'mean' or 'pooled', got '" + text + "'");
}

void EvalConfig::validate() const {
  if (cutoff.mode == Cutoff::Mode::Fixed && cutoff.k == 0) throw Error("cutoff k must be >= 1");
  if (relevance_threshold < 0) throw Error("relevance threshold must be >= 0");
  if (targets.empty()) throw Error("at least one target distribution is required");
  std::set<std::string> names;
  for (const auto& t : targets) {
    if (!is_valid_label(t.name)) throw Error("invalid target name '" + t.name + "'");
    if (!names.insert(t.name).second) throw Error("duplicate target '" + t.name + "'");
  }
  std::set<std::string> labels;
  for (const auto& i : interpolations) {
    if (!(i.weight >= 0.0 && i.weight <= 1.0)) throw Error("interpolation weight must be in [0, 1]");
    if (!labels.insert(i.label()).second) throw Error("duplicate interpolation '" + i.label() + "'");
  }
}

// ---------------------------------------------------------------------------
// Targets and context

CategoricalDistribution derive_population_target(const Qrels& qrels, const CategorySource& source,
                                                 std::span<const std::string> categories,
                                                 int relevance_threshold,
                                                 Diagnostics* diagnostics) {
  std::vector<std::uint64_t> counts(categories.size(), 0);
  std::size_t relevant = 0;
  for (const auto& [topic, docs] : qrels.judgments()) {
    for (const auto& [doc, grade] : docs) {
      if (grade < relevance_threshold) continue;
      ++relevant;
      auto category = resolve_category(doc, topic, source, qrels, diagnostics);
      if (auto idx = index_of(categories, category)) ++counts[*idx];
    }
  }
  if (relevant == 0) throw Error("population target: qrels contain no relevant documents");
  return laplace_smooth(counts, {categories.begin(), categories.end()});
}

EvalContext make_context(const Qrels& qrels, const CategorySource& source, const EvalConfig& config,
                         Diagnostics* diagnostics) {
  config.validate();
  source.validate_against(qrels, config.relevance_threshold);
  EvalContext ctx{qrels, source, config, source.categories(), {}};
  for (const auto& spec : config.targets) {
    switch (spec.kind) {
      case TargetKind::Uniform:
        ctx.targets.push_back({spec.name, CategoricalDistribution::uniform(ctx.categories)});
        break;
      case TargetKind::Population:
        ctx.targets.push_back(
            {spec.name, derive_population_target(qrels, source, ctx.categories,
                                                 config.relevance_threshold, diagnostics)});
        break;
      case TargetKind::Custom: {
        if (spec.table.size() != ctx.categories.size()) {
          throw Error("target '" + spec.name + "' does not cover the category set");
        }
        double total = 0.0;
        for (const auto& [_, p] : spec.table) total += p;
        std::vector<double> mass;
        for (std::size_t i = 0; i < ctx.categories.size(); ++i) {
          if (spec.table[i].first != ctx.categories[i]) {
            throw Error("target '" + spec.name + "' categories do not match the category set");
          }
          // Tables are accepted at 1e-9; rescale so the mass is exact.
          mass.push_back(spec.table[i].second / total);
        }
        ctx.targets.push_back({spec.name, CategoricalDistribution(ctx.categories, std::move(mass))});
        break;
      }
    }
  }
  return ctx;
}

// ---------------------------------------------------------------------------
// Scoring

std::optional<TopicScore> score_topic(const EvalContext& ctx, const std::string& topic_id,
                                      std::span<const RunEntry> ranking,
                                      Diagnostics* diagnostics) {
  const DocSet relevant = ctx.qrels.relevant_docs(topic_id, ctx.config.relevance_threshold);
  if (relevant.empty()) return std::nullopt;

  std::vector<std::string> docs;
  docs.reserve(ranking.size());
  for (const auto& e : ranking) docs.push_back(e.doc_id);

  TopicScore score;
  score.topic_id = topic_id;
  score.relevant = relevant.size();
  score.r_precision = r_precision(docs, relevant);
  score.depth = results_depth(ctx.config.cutoff, relevant.size(), docs.size());
  score.result_counts.assign(ctx.categories.size(), 0);

  const bool relevant_only = ctx.config.results_scope == ResultsScope::RelevantRetrievedOnly;
  for (std::size_t i = 0; i < score.depth; ++i) {
    if (relevant_only && !relevant.contains(docs[i])) continue;
    auto category = resolve_category(docs[i], topic_id, ctx.source, ctx.qrels, diagnostics);
    if (auto idx = index_of(ctx.categories, category)) ++score.result_counts[*idx];
  }

  const auto results = laplace_smooth(score.result_counts, ctx.categories);
  for (const auto& target : ctx.targets) {
    score.kl_by_target[target.name] = kl_divergence(results, target.distribution);
  }
  return score;
}

SystemScore score_system(const EvalContext& ctx, const Run& run, Diagnostics* diagnostics) {
  SystemScore out;
  out.system_tag = run.system_tag;
  for (const auto& [topic, entries] : run.topics) {
    if (auto score = score_topic(ctx, topic, entries, diagnostics)) {
      out.topics.push_back(std::move(*score));
    } else {
      out.skipped_topics.push_back(topic);
    }
  }
  if (out.topics.empty()) {
    throw Error("run '" + run.system_tag + "' has no topics with relevant documents");
  }

  const auto n = static_cast<double>(out.topics.size());
  double r_sum = 0.0;
  for (const auto& t : out.topics) r_sum += t.r_precision;
  out.mean_r_precision = r_sum / n;

  if (ctx.config.aggregation == Aggregation::PerTopicMeanKL) {
    for (const auto& target : ctx.targets) {
      double kl_sum = 0.0;
      for (const auto& t : out.topics) kl_sum += t.kl_by_target.at(target.name);
      out.mean_kl_by_target[target.name] = kl_sum / n;
    }
  } else {
    std::vector<std::uint64_t> pooled(ctx.categories.size(), 0);
    for (const auto& t : out.topics) {
      for (std::size_t c = 0; c < pooled.size(); ++c) pooled[c] += t.result_counts[c];
    }
    const auto results = laplace_smooth(pooled, ctx.categories);
    for (const auto& target : ctx.targets) {
      out.mean_kl_by_target[target.name] = kl_divergence(results, target.distribution);
    }
  }
  return out;
}

double SystemScore::metric(const std::string& column) const {
  if (column == "r_prec") return mean_r_precision;
  if (column.starts_with("kl_")) {
    auto it = mean_kl_by_target.find(column.substr(3));
    if (it != mean_kl_by_target.end()) return it->second;
  }
  if (auto it = normalized.find(column); it != normalized.end()) return it->second;
  if (auto it = combined.find(column); it != combined.end()) return it->second;
  throw Error("unknown metric column '" + column + "'");
}

const SystemScore& BatchReport::system(const std::string& tag) const {
  for (const auto& s : systems) {
    if (s.system_tag == tag) return s;
  }
  throw Error("no system '" + tag + "' in report");
}

std::vector<std::string> find_unmapped_docs(const EvalContext& ctx, std::span<const Run> runs) {
  std::set<std::string> missing;
  const bool relevant_only = ctx.config.results_scope == ResultsScope::RelevantRetrievedOnly;
  for (const auto& run : runs) {
    for (const auto& [topic, entries] : run.topics) {
      const DocSet relevant = ctx.qrels.relevant_docs(topic, ctx.config.relevance_threshold);
      if (relevant.empty()) continue;
      const std::size_t depth = results_depth(ctx.config.cutoff, relevant.size(), entries.size());
      for (std::size_t i = 0; i < depth; ++i) {
        const auto& doc = entries[i].doc_id;
        if (relevant_only && !relevant.contains(doc)) continue;
        if (!ctx.source.lookup(doc, topic, ctx.qrels)) missing.insert(doc);
      }
    }
  }
  if (has_population_target(ctx.config)) {
    for (const auto& [topic, docs] : ctx.qrels.judgments()) {
      for (const auto& [doc, grade] : docs) {
        if (grade >= ctx.config.relevance_threshold && !ctx.source.lookup(doc, topic, ctx.qrels)) {
          missing.insert(doc);
        }
      }
    }
  }
  return {missing.begin(), missing.end()};
}

std::string batch_membership_hash(std::vector<std::string> tags) {
  std::sort(tags.begin(), tags.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& tag : tags) {
    for (unsigned char c : tag) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= static_cast<unsigned char>('\n');
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

BatchReport evaluate_batch(std::span<const Run> runs, const Qrels& qrels,
                           const CategorySource& source, const EvalConfig& config) {
  if (runs.empty()) throw Error("no runs to evaluate");
  std::set<std::string> tags;
  for (const auto& run : runs) {
    if (!tags.insert(run.system_tag).second) {
      throw Error("duplicate system tag '" + run.system_tag + "'");
    }
  }
  if (runs.size() < 2 && !config.raw_only) {
    throw Error("normalization needs at least two runs; use raw-only output for a single run");
  }

  Diagnostics diagnostics;
  EvalContext ctx = make_context(qrels, source, config, &diagnostics);
  if (source.options().strict) {
    auto missing = find_unmapped_docs(ctx, runs);
    if (!missing.empty()) throw UnmappedDocumentsError(std::move(missing));
  }

  BatchReport report;
  report.config = config;
  report.categories = ctx.categories;
  report.targets = ctx.targets;

  std::vector<SystemScore> scores(runs.size());
  std::vector<Diagnostics> worker_diagnostics(runs.size());
  parallel_for(runs.size(), config.threads, [&](std::size_t i) {
    scores[i] = score_system(ctx, runs[i], &worker_diagnostics[i]);
  });
  for (const auto& d : worker_diagnostics) diagnostics.merge(d);

  std::sort(scores.begin(), scores.end(), [](const SystemScore& a, const SystemScore& b) {
    return better(a.mean_r_precision, a.system_tag, b.mean_r_precision, b.system_tag);
  });

  report.columns = {"tag", "r_prec"};
  if (!config.raw_only) report.columns.push_back("n_r_prec");
  for (const auto& target : ctx.targets) {
    report.columns.push_back("kl_" + target.name);
    if (config.raw_only) continue;
    report.columns.push_back("fair_" + target.name);
    for (const auto& how : config.interpolations) {
      report.columns.push_back(how.label() + "_" + target.name);
    }
  }

  if (!config.raw_only) {
    std::vector<double> column(scores.size());
    auto normalize_into = [&](const std::string& name, const NormalizedScores& normalized) {
      if (normalized.degenerate) {
        report.warnings.push_back("all systems tie on " + name + "; normalized to 0.5");
      }
      for (std::size_t i = 0; i < scores.size(); ++i) scores[i].normalized[name] = normalized.values[i];
    };

    for (std::size_t i = 0; i < scores.size(); ++i) column[i] = scores[i].mean_r_precision;
    normalize_into("n_r_prec", minmax_normalize(column));
    for (const auto& target : ctx.targets) {
      for (std::size_t i = 0; i < scores.size(); ++i) {
        column[i] = scores[i].mean_kl_by_target.at(target.name);
      }
      normalize_into("fair_" + target.name, fairness_scores(column));
    }
    for (auto& s : scores) {
      const double r = s.normalized.at("n_r_prec");
      for (const auto& target : ctx.targets) {
        const double f = s.normalized.at("fair_" + target.name);
        for (const auto& how : config.interpolations) {
          s.combined[how.label() + "_" + target.name] = interpolate(r, f, how);
        }
      }
    }
  }
  report.systems = std::move(scores);

  // Leaderboards over every "higher is better" column.
  for (const auto& name : report.columns) {
    if (name == "tag" || name == "n_r_prec" || name.starts_with("kl_")) continue;
    std::vector<const SystemScore*> order;
    for (const auto& s : report.systems) order.push_back(&s);
    std::sort(order.begin(), order.end(), [&](const SystemScore* a, const SystemScore* b) {
      return better(a->metric(name), a->system_tag, b->metric(name), b->system_tag);
    });
    auto& board = report.leaderboards[name];
    for (std::size_t i = 0; i < order.size() && i < config.leaderboard_size; ++i) {
      board.push_back(order[i]->system_tag);
    }
  }

  if (!config.raw_only) {
    std::vector<double> baseline;
    for (const auto& s : report.systems) baseline.push_back(s.mean_r_precision);
    for (const auto& name : report.columns) {
      if (!(name.starts_with("fair_") || report.systems.front().combined.contains(name))) continue;
      std::vector<double> other;
      for (const auto& s : report.systems) other.push_back(s.metric(name));
      report.correlations.push_back(
          {"r_prec", name, kendall_tau_b(baseline, other), report.systems.size()});
    }
  }

  report.batch_hash = batch_membership_hash({tags.begin(), tags.end()});
  report.warnings.insert(report.warnings.begin(), diagnostics.warnings.begin(),
                         diagnostics.warnings.end());
  report.unknown_category_docs = diagnostics.unknown_docs.size();
  if (!diagnostics.unknown_docs.empty()) {
    report.warnings.push_back(std::to_string(diagnostics.unknown_docs.size()) +
                              " document(s) had no category mapping and were " +
                              (source.options().include_unknown ? "counted as __unknown__"
                                                                : "excluded"));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Bias audit

std::uint64_t BiasReport::total_relevant() const {
  std::uint64_t n = 0;
  for (auto c : global_counts) n += c;
  return n;
}

BiasReport bias_report(const Qrels& qrels, const CategorySource& source,
                       std::span<const std::string> categories, const BiasOptions& options) {
  if (!(options.scarcity_threshold >= 0.0 && options.scarcity_threshold <= 1.0)) {
    throw Error("scarcity threshold must be in [0, 1]");
  }
  source.validate_against(qrels, options.relevance_threshold);

  if (source.options().strict) {
    std::set<std::string> missing;
    for (const auto& [topic, docs] : qrels.judgments()) {
      for (const auto& [doc, grade] : docs) {
        if (grade >= options.relevance_threshold && !source.lookup(doc, topic, qrels)) {
          missing.insert(doc);
        }
      }
    }
    if (!missing.empty()) throw UnmappedDocumentsError({missing.begin(), missing.end()});
  }

  BiasReport report;
  report.categories.assign(categories.begin(), categories.end());
  report.options = options;
  report.global_counts.assign(categories.size(), 0);
  Diagnostics diagnostics;

  for (const auto& [topic, docs] : qrels.judgments()) {
    auto& row = report.per_topic_counts[topic];
    row.assign(categories.size(), 0);
    std::size_t relevant = 0;
    for (const auto& [doc, grade] : docs) {
      if (grade < options.relevance_threshold) continue;
      ++relevant;
      auto category = resolve_category(doc, topic, source, qrels, &diagnostics);
      if (auto idx = index_of(categories, category)) {
        ++row[*idx];
        ++report.global_counts[*idx];
      }
    }
    if (relevant == 0) report.empty_topics.push_back(topic);
  }

  if (report.total_relevant() > 0) {
    report.global_proportions =
        CategoricalDistribution::from_counts(report.categories, report.global_counts);
  }
  report.smoothed_proportions = laplace_smooth(report.global_counts, report.categories);

  for (std::size_t c = 0; c < categories.size(); ++c) {
    const double share = report.global_proportions ? (*report.global_proportions)[c] : 0.0;
    if (share < options.scarcity_threshold) report.scarce_categories.push_back(categories[c]);
  }
  report.warnings = std::move(diagnostics.warnings);
  if (!diagnostics.unknown_docs.empty()) {
    report.warnings.push_back(std::to_string(diagnostics.unknown_docs.size()) +
                              " relevant document(s) had no category mapping");
  }
  for (const auto& topic : report.empty_topics) {
    report.warnings.push_back("topic " + topic + " has no relevant documents");
  }
  return report;
}

}  // namespace fairdex
