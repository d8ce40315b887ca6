#include "fairdex/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "fairdex/random.hpp"
#include "text_util.hpp"

namespace fairdex {

namespace {

std::string zero_pad(std::size_t value, std::size_t width) {
  std::string s = std::to_string(value);
  if (s.size() < width) s.insert(0, width - s.size(), '0');
  return s;
}

std::string profile_name(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::RelevanceOptimal:
      return "relevance_optimal";
    case ProfileKind::FairnessOptimal:
      return "fairness_optimal";
    case ProfileKind::Random:
      return "random";
    case ProfileKind::Noisy:
      return "noisy";
  }
  return "?";
}

ProfileKind parse_profile_kind(const std::string& name) {
  if (name == "relevance_optimal") return ProfileKind::RelevanceOptimal;
  if (name == "fairness_optimal") return ProfileKind::FairnessOptimal;
  if (name == "random") return ProfileKind::Random;
  if (name == "noisy") return ProfileKind::Noisy;
  throw Error("unknown system profile '" + name + "'");
}

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw Error(where + ": unknown key '" + key + "'");
    }
  }
}

std::vector<std::size_t> relevance_optimal_order(const std::vector<SynthDoc>& pool) {
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) order[i] = i;
  return order;
}

// Fills `depth` slots by weighted round-robin over categories: each slot goes
// to the category furthest below its target share, skipping exhausted ones.
std::vector<std::size_t> fairness_optimal_order(const std::vector<SynthDoc>& pool,
                                                const std::vector<double>& target,
                                                std::size_t depth, Rng& rng) {
  std::vector<std::vector<std::size_t>> by_category(target.size());
  for (std::size_t i = 0; i < pool.size(); ++i) by_category[pool[i].category].push_back(i);
  for (auto& group : by_category) rng.shuffle(group);

  std::vector<std::size_t> taken(target.size(), 0);
  std::vector<std::size_t> order;
  depth = std::min(depth, pool.size());
  for (std::size_t slot = 0; slot < depth; ++slot) {
    std::size_t best = target.size();
    double best_deficit = 0.0;
    for (std::size_t c = 0; c < target.size(); ++c) {
      if (taken[c] == by_category[c].size()) continue;
      const double deficit = target[c] * static_cast<double>(slot + 1) - static_cast<double>(taken[c]);
      if (best == target.size() || deficit > best_deficit) {
        best = c;
        best_deficit = deficit;
      }
    }
    order.push_back(by_category[best][taken[best]++]);
  }
  return order;
}

// nlohmann converts negative integers to size_t silently.
std::size_t get_count(const nlohmann::json& v, const std::string& name) {
  if (!v.is_number_unsigned()) throw Error("synth spec: " + name + " must be a non-negative integer");
  return v.get<std::size_t>();
}

}  // namespace

// ---------------------------------------------------------------------------
// Spec

void SynthSpec::validate() const {
  if (n_topics == 0) throw Error("synth spec: n_topics must be >= 1");
  if (categories.empty()) throw Error("synth spec: at least one category is required");
  std::set<std::string> unique;
  for (const auto& c : categories) {
    if (!is_valid_label(c) || c == kUnknownCategory) {
      throw Error("synth spec: invalid category label '" + c + "'");
    }
    if (!unique.insert(c).second) throw Error("synth spec: duplicate category '" + c + "'");
  }
  if (min_relevant == 0 || min_relevant > max_relevant) {
    throw Error("synth spec: relevant_per_topic needs 1 <= min <= max");
  }
  if (!category_skew.empty()) {
    for (const auto& [category, weight] : category_skew) {
      if (!unique.contains(category)) {
        throw Error("synth spec: skew for unknown category '" + category + "'");
      }
      if (!std::isfinite(weight) || weight <= 0.0) {
        throw Error("synth spec: weight for '" + category + "' must be > 0");
      }
    }
    if (category_skew.size() != categories.size()) {
      throw Error("synth spec: category_skew must give a weight for every category");
    }
  }
  if (run_depth == 0) throw Error("synth spec: run_depth must be >= 1");
  std::set<std::string> tags;
  for (std::size_t i = 0; i < systems.size(); ++i) {
    const auto& p = systems[i];
    if (p.kind == ProfileKind::FairnessOptimal && p.target != "uniform" &&
        p.target != "population") {
      throw Error("synth spec: fairness_optimal target must be 'uniform' or 'population'");
    }
    if (p.kind == ProfileKind::Noisy && !(p.noise >= 0.0 && p.noise <= 1.0)) {
      throw Error("synth spec: noise must be in [0, 1]");
    }
    const std::string tag = p.tag.empty() ? default_tag(i, p) : p.tag;
    if (!is_valid_label(tag)) throw Error("synth spec: invalid system tag '" + tag + "'");
    if (!tags.insert(tag).second) throw Error("synth spec: duplicate system tag '" + tag + "'");
  }
}

std::vector<double> SynthSpec::normalized_skew() const {
  std::vector<double> w;
  for (const auto& c : categories) {
    w.push_back(category_skew.empty() ? 1.0 : category_skew.at(c));
  }
  double total = 0.0;
  for (double x : w) total += x;
  for (double& x : w) x /= total;
  return w;
}

SynthSpec parse_synth_spec(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("synth spec must be a JSON object");
  reject_unknown_keys(j,
                      {"n_topics", "categories", "relevant_per_topic", "category_skew",
                       "nonrelevant_ratio", "run_depth", "n_systems", "systems"},
                      "synth spec");
  SynthSpec spec;
  try {
    spec.n_topics = get_count(j.at("n_topics"), "n_topics");
    spec.categories = j.at("categories").get<std::vector<std::string>>();
    if (j.contains("relevant_per_topic")) {
      const auto& r = j.at("relevant_per_topic");
      if (r.is_array()) {
        if (r.size() != 2) throw Error("synth spec: relevant_per_topic must be [min, max]");
        spec.min_relevant = get_count(r.at(0), "relevant_per_topic");
        spec.max_relevant = get_count(r.at(1), "relevant_per_topic");
      } else {
        spec.min_relevant = spec.max_relevant = get_count(r, "relevant_per_topic");
      }
    }
    if (j.contains("category_skew")) {
      spec.category_skew = j.at("category_skew").get<std::map<std::string, double>>();
    }
    if (j.contains("nonrelevant_ratio")) {
      spec.nonrelevant_ratio = get_count(j.at("nonrelevant_ratio"), "nonrelevant_ratio");
    }
    if (j.contains("run_depth")) spec.run_depth = get_count(j.at("run_depth"), "run_depth");
    if (j.contains("systems")) {
      for (const auto& s : j.at("systems")) {
        reject_unknown_keys(s, {"profile", "target", "seed", "noise", "tag"}, "synth system");
        SystemProfile p;
        p.kind = parse_profile_kind(s.at("profile").get<std::string>());
        p.target = s.value("target", p.target);
        if (s.contains("seed")) p.seed = get_count(s.at("seed"), "seed");
        p.noise = s.value("noise", 0.0);
        p.tag = s.value("tag", std::string());
        spec.systems.push_back(std::move(p));
      }
    }
    if (j.contains("n_systems") && get_count(j.at("n_systems"), "n_systems") != spec.systems.size()) {
      throw Error("synth spec: n_systems does not match the number of system profiles");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("synth spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

nlohmann::ordered_json to_json(const SynthSpec& spec) {
  nlohmann::ordered_json j;
  j["n_topics"] = spec.n_topics;
  j["categories"] = spec.categories;
  j["relevant_per_topic"] = {spec.min_relevant, spec.max_relevant};
  nlohmann::ordered_json skew = nlohmann::ordered_json::object();
  for (const auto& c : spec.categories) {
    skew[c] = spec.category_skew.empty() ? 1.0 : spec.category_skew.at(c);
  }
  j["category_skew"] = skew;
  j["nonrelevant_ratio"] = spec.nonrelevant_ratio;
  j["run_depth"] = spec.run_depth;
  j["n_systems"] = spec.systems.size();
  nlohmann::ordered_json systems = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < spec.systems.size(); ++i) {
    const auto& p = spec.systems[i];
    nlohmann::ordered_json s;
    s["profile"] = profile_name(p.kind);
    if (p.kind == ProfileKind::FairnessOptimal) s["target"] = p.target;
    if (p.seed) s["seed"] = *p.seed;
    if (p.kind == ProfileKind::Noisy) s["noise"] = p.noise;
    s["tag"] = p.tag.empty() ? default_tag(i, p) : p.tag;
    systems.push_back(s);
  }
  j["systems"] = systems;
  return j;
}

// ---------------------------------------------------------------------------
// Collections

CategorySource SynthCollection::explicit_source() const {
  CategorySource::Table table;
  for (const auto& [topic, pool] : pools) {
    for (const auto& d : pool) table.emplace_back(d.doc_id, categories[d.category]);
  }
  return CategorySource::explicit_map(std::move(table), source.options());
}

std::vector<std::string> SynthCollection::corpus() const {
  std::vector<std::string> docs;
  for (const auto& [topic, pool] : pools) {
    for (const auto& d : pool) docs.push_back(d.doc_id);
  }
  return docs;
}

SynthCollection gen_collection(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(Rng::derive(seed, 0));

  std::vector<std::string> categories = spec.categories;
  std::vector<double> weights = spec.normalized_skew();
  std::vector<double> cumulative;
  double running = 0.0;
  for (double w : weights) cumulative.push_back(running += w);

  CategorySource::Table rules;
  for (std::size_t c = 0; c < categories.size(); ++c) {
    rules.emplace_back("c" + std::to_string(c) + "-", categories[c]);
  }

  const std::size_t width = std::max<std::size_t>(3, std::to_string(spec.n_topics).size());
  std::vector<std::string> topics;
  std::map<std::string, std::vector<SynthDoc>> pools;
  std::map<std::string, Qrels::TopicJudgments> judgments;
  for (std::size_t t = 0; t < spec.n_topics; ++t) {
    const std::string topic = zero_pad(t + 1, width);
    topics.push_back(topic);
    const auto relevant = static_cast<std::size_t>(rng.between(spec.min_relevant, spec.max_relevant));
    const std::size_t total = relevant * (1 + spec.nonrelevant_ratio);
    auto& pool = pools[topic];
    auto& qrels_topic = judgments[topic];
    pool.reserve(total);
    for (std::size_t i = 0; i < total; ++i) {
      const std::size_t category = rng.weighted(cumulative);
      SynthDoc doc{"c" + std::to_string(category) + "-" + topic + "-" + zero_pad(i + 1, 5), category,
                   i < relevant};
      qrels_topic.emplace(doc.doc_id, doc.relevant ? 1 : 0);
      pool.push_back(std::move(doc));
    }
  }
  return SynthCollection{std::move(categories), std::move(weights), std::move(topics),
                         std::move(pools), Qrels(std::move(judgments)),
                         CategorySource::prefix_rules(std::move(rules))};
}

// ---------------------------------------------------------------------------
// Runs

std::string default_tag(std::size_t index, const SystemProfile& profile) {
  std::string tag = "sys" + zero_pad(index + 1, 2) + "-";
  switch (profile.kind) {
    case ProfileKind::RelevanceOptimal:
      return tag + "relopt";
    case ProfileKind::FairnessOptimal:
      return tag + "fairopt-" + profile.target;
    case ProfileKind::Random:
      return tag + "random";
    case ProfileKind::Noisy:
      return tag + "noisy" + detail::format_double(profile.noise);
  }
  return tag;
}

Run gen_run(const SystemProfile& profile, const SynthCollection& collection, std::uint64_t seed,
            std::size_t depth, const std::string& tag) {
  if (!is_valid_label(tag)) throw Error("invalid system tag '" + tag + "'");
  if (depth == 0) throw Error("run depth must be >= 1");
  Rng rng(profile.kind == ProfileKind::Random && profile.seed ? *profile.seed : seed);

  std::vector<double> fair_target;
  if (profile.kind == ProfileKind::FairnessOptimal) {
    if (profile.target == "uniform") {
      fair_target.assign(collection.categories.size(),
                         1.0 / static_cast<double>(collection.categories.size()));
    } else if (profile.target == "population") {
      fair_target = collection.category_weights;
    } else {
      throw Error("fairness_optimal target must be 'uniform' or 'population'");
    }
  }

  Run run;
  run.system_tag = tag;
  for (const auto& [topic, pool] : collection.pools) {
    std::vector<std::size_t> order;
    switch (profile.kind) {
      case ProfileKind::RelevanceOptimal:
        order = relevance_optimal_order(pool);
        break;
      case ProfileKind::FairnessOptimal:
        order = fairness_optimal_order(pool, fair_target, depth, rng);
        break;
      case ProfileKind::Random:
        order = relevance_optimal_order(pool);
        rng.shuffle(order);
        break;
      case ProfileKind::Noisy: {
        order = relevance_optimal_order(pool);
        const auto relevant = static_cast<std::size_t>(
            std::count_if(pool.begin(), pool.end(), [](const SynthDoc& d) { return d.relevant; }));
        const std::size_t nonrelevant = pool.size() - relevant;
        if (nonrelevant == 0) break;
        for (std::size_t i = 0; i < relevant; ++i) {
          if (rng.bernoulli(profile.noise)) {
            std::swap(order[i], order[relevant + static_cast<std::size_t>(rng.below(nonrelevant))]);
          }
        }
        break;
      }
    }
    const std::size_t n = std::min(depth, order.size());
    auto& entries = run.topics[topic];
    entries.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      entries.push_back(RunEntry{topic, pool[order[i]].doc_id, static_cast<int>(i + 1),
                                 static_cast<double>(n - i), tag});
    }
  }
  return run;
}

std::vector<Run> gen_runs(const SynthSpec& spec, const SynthCollection& collection,
                          std::uint64_t seed) {
  std::vector<Run> runs;
  runs.reserve(spec.systems.size());
  for (std::size_t i = 0; i < spec.systems.size(); ++i) {
    const auto& profile = spec.systems[i];
    const std::string tag = profile.tag.empty() ? default_tag(i, profile) : profile.tag;
    runs.push_back(gen_run(profile, collection, Rng::derive(seed, i + 1), spec.run_depth, tag));
  }
  return runs;
}

void materialize(const SynthSpec& spec, std::uint64_t seed, const std::filesystem::path& out_dir) {
  const auto collection = gen_collection(spec, seed);
  const auto runs = gen_runs(spec, collection, seed);

  std::filesystem::create_directories(out_dir / "runs");
  auto open = [](const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    return out;
  };

  std::vector<std::string> files;
  {
    auto out = open(out_dir / "qrels.txt");
    write_qrels(out, collection.qrels);
    files.push_back("qrels.txt");
  }
  {
    auto out = open(out_dir / "categories.tsv");
    write_category_source(out, collection.explicit_source());
    files.push_back("categories.tsv");
  }
  {
    auto out = open(out_dir / "prefix_rules.tsv");
    write_category_source(out, collection.source);
    files.push_back("prefix_rules.tsv");
  }
  for (const auto& run : runs) {
    const std::string name = "runs/" + run.system_tag + ".run";
    auto out = open(out_dir / name);
    write_run(out, run);
    files.push_back(name);
  }

  nlohmann::ordered_json manifest;
  manifest["schema"] = "fairdex/1";
  manifest["kind"] = "synthetic_collection";
  manifest["seed"] = seed;
  manifest["spec"] = to_json(spec);
  manifest["categories"] = collection.categories;
  manifest["topics"] = collection.topics.size();
  manifest["documents"] = collection.qrels.size();
  manifest["files"] = files;
  auto out = open(out_dir / "manifest.json");
  out << manifest.dump(2) << '\n';
}

}  // namespace fairdex
