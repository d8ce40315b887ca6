#pragma once

// Seeded synthetic test collections and system runs with controllable category
// imbalance, for desk-scale studies without TREC data.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairdex/corpus_io.hpp"

namespace fairdex {

enum class ProfileKind { RelevanceOptimal, FairnessOptimal, Random, Noisy };

struct SystemProfile {
  ProfileKind kind = ProfileKind::RelevanceOptimal;
  // FairnessOptimal: "uniform" or "population" (the collection's category skew).
  std::string target = "uniform";
  // Random: explicit seed; otherwise derived from the batch seed.
  std::optional<std::uint64_t> seed;
  // Noisy: probability that each relevant document trades places with a
  // random non-relevant one.
  double noise = 0.0;
  // Empty means an automatic tag.
  std::string tag;

  static SystemProfile relevance_optimal() { return {}; }
  static SystemProfile fairness_optimal(std::string target = "uniform") {
    return {ProfileKind::FairnessOptimal, std::move(target), std::nullopt, 0.0, {}};
  }
  static SystemProfile random(std::optional<std::uint64_t> seed = std::nullopt) {
    return {ProfileKind::Random, "uniform", seed, 0.0, {}};
  }
  static SystemProfile noisy(double noise) {
    return {ProfileKind::Noisy, "uniform", std::nullopt, noise, {}};
  }
};

struct SynthSpec {
  std::size_t n_topics = 1;
  std::vector<std::string> categories;
  std::size_t min_relevant = 10;
  std::size_t max_relevant = 30;
  // Unnormalized, strictly positive; empty means equal weights.
  std::map<std::string, double> category_skew;
  // Non-relevant pool size as a multiple of the relevant count per topic.
  std::size_t nonrelevant_ratio = 10;
  std::size_t run_depth = 100;
  std::vector<SystemProfile> systems;

  /// Throws Error for an unusable spec.
  void validate() const;
  /// Category weights in category order, normalized to sum to 1.
  std::vector<double> normalized_skew() const;
};

/// Parses the JSON spec format; unknown keys are rejected.
SynthSpec parse_synth_spec(const nlohmann::json& j);
nlohmann::ordered_json to_json(const SynthSpec& spec);

struct SynthDoc {
  std::string doc_id;
  std::size_t category = 0;
  bool relevant = false;
};

struct SynthCollection {
  std::vector<std::string> categories;
  std::vector<double> category_weights;  // normalized skew
  std::vector<std::string> topics;
  // Per topic: relevant documents first, then non-relevant, in generation order.
  std::map<std::string, std::vector<SynthDoc>> pools;
  Qrels qrels;
  // "c<index>-" doc id prefix -> category.
  CategorySource source;

  /// The same assignment as an explicit doc_id -> category table.
  CategorySource explicit_source() const;
  std::vector<std::string> corpus() const;
};

SynthCollection gen_collection(const SynthSpec& spec, std::uint64_t seed);

/// One run of `depth` documents per topic (fewer if the pool is smaller).
Run gen_run(const SystemProfile& profile, const SynthCollection& collection, std::uint64_t seed,
            std::size_t depth, const std::string& tag);

/// Tag used when a profile has none, e.g. "sys03-noisy0.25".
std::string default_tag(std::size_t index, const SystemProfile& profile);

/// Every run of the spec, seeded per system from `seed`.
std::vector<Run> gen_runs(const SynthSpec& spec, const SynthCollection& collection,
                          std::uint64_t seed);

/// Writes qrels.txt, categories.tsv, prefix_rules.tsv, runs/<tag>.run and
/// manifest.json into `out_dir`. Output is byte-identical for equal spec and seed.
void materialize(const SynthSpec& spec, std::uint64_t seed, const std::filesystem::path& out_dir);

}  // namespace fairdex
