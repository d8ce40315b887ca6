#include "fairdex/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fairdex/distribution.hpp"
#include "text_util.hpp"

namespace fairdex {

CategoricalDistribution::CategoricalDistribution(std::vector<std::string> categories,
                                                 std::vector<double> mass)
    : categories_(std::move(categories)), mass_(std::move(mass)) {
  if (categories_.empty()) throw Error("distribution needs at least one category");
  if (categories_.size() != mass_.size()) {
    throw Error("distribution has " + std::to_string(categories_.size()) + " categories but " +
                std::to_string(mass_.size()) + " probabilities");
  }
  std::set<std::string> unique(categories_.begin(), categories_.end());
  if (unique.size() != categories_.size()) throw Error("duplicate category in distribution");
  double total = 0.0;
  for (double p : mass_) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error("probability " + detail::format_double(p) + " outside [0, 1]");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw Error("distribution mass sums to " + detail::format_double(total));
  }
}

CategoricalDistribution CategoricalDistribution::uniform(std::vector<std::string> categories) {
  if (categories.empty()) throw Error("distribution needs at least one category");
  std::vector<double> mass(categories.size(), 1.0 / static_cast<double>(categories.size()));
  return {std::move(categories), std::move(mass)};
}

CategoricalDistribution CategoricalDistribution::from_counts(
    std::vector<std::string> categories, std::span<const std::uint64_t> counts) {
  if (categories.size() != counts.size()) throw Error("counts do not match category set");
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) throw Error("cannot estimate a distribution from zero observations");
  std::vector<double> mass;
  mass.reserve(counts.size());
  for (auto c : counts) mass.push_back(static_cast<double>(c) / static_cast<double>(total));
  return {std::move(categories), std::move(mass)};
}

double CategoricalDistribution::probability(const std::string& category) const {
  auto it = std::find(categories_.begin(), categories_.end(), category);
  if (it == categories_.end()) throw Error("unknown category '" + category + "'");
  return mass_[static_cast<std::size_t>(it - categories_.begin())];
}

CategoricalDistribution laplace_smooth(std::span<const std::uint64_t> counts,
                                       std::vector<std::string> categories) {
  if (categories.empty()) throw Error("laplace_smooth: empty category set");
  if (counts.size() != categories.size()) {
    throw Error("laplace_smooth: " + std::to_string(counts.size()) + " counts for " +
                std::to_string(categories.size()) + " categories");
  }
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  const double denom = static_cast<double>(total) + static_cast<double>(categories.size());
  std::vector<double> mass;
  mass.reserve(counts.size());
  for (auto c : counts) mass.push_back((static_cast<double>(c) + 1.0) / denom);
  return {std::move(categories), std::move(mass)};
}

CategoricalDistribution laplace_smooth(const std::map<std::string, std::uint64_t>& counts,
                                       std::vector<std::string> categories) {
  std::vector<std::uint64_t> ordered(categories.size(), 0);
  for (const auto& [category, count] : counts) {
    auto it = std::find(categories.begin(), categories.end(), category);
    if (it == categories.end()) {
      throw Error("laplace_smooth: count for unknown category '" + category + "'");
    }
    ordered[static_cast<std::size_t>(it - categories.begin())] = count;
  }
  return laplace_smooth(ordered, std::move(categories));
}

double kl_divergence(const CategoricalDistribution& p, const CategoricalDistribution& q) {
  if (p.categories() != q.categories()) {
    throw Error("kl_divergence: distributions are over different category sets");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = p[i];
    if (pi == 0.0) continue;
    const double qi = q[i];
    if (qi == 0.0) {
      throw Error("kl_divergence: infinite divergence (q is zero for '" + p.categories()[i] +
                  "')");
    }
    sum += pi * std::log(pi / qi);
  }
  // Rounding can leave a value a few ulps below zero for near-identical inputs.
  return std::max(sum, 0.0);
}

// ---------------------------------------------------------------------------

NormalizedScores minmax_normalize(std::span<const double> values) {
  if (values.empty()) throw Error("minmax_normalize: empty input");
  for (double v : values) {
    if (!std::isfinite(v)) throw Error("minmax_normalize: non-finite value");
  }
  auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  NormalizedScores out;
  out.values.reserve(values.size());
  if (hi == lo) {
    out.degenerate = true;
    out.values.assign(values.size(), 0.5);
    return out;
  }
  const double range = hi - lo;
  for (double v : values) out.values.push_back((v - lo) / range);
  return out;
}

NormalizedScores fairness_scores(std::span<const double> kl_values) {
  auto out = minmax_normalize(kl_values);
  if (!out.degenerate) {
    for (double& v : out.values) v = 1.0 - v;
  }
  return out;
}

double r_precision(std::span<const std::string> ranked_docs, const DocSet& relevant) {
  if (relevant.empty()) throw Error("r_precision: topic has no relevant documents");
  const std::size_t r = relevant.size();
  const std::size_t depth = std::min(r, ranked_docs.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < depth; ++i) {
    if (relevant.contains(ranked_docs[i])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(r);
}

std::string Interpolation::label() const {
  std::string base = kind == InterpolationKind::ArithmeticMean ? "mean" : "gmean";
  if (weight == 0.5) return base;
  return base + "_w" + detail::format_double(weight);
}

Interpolation Interpolation::parse(const std::string& label) {
  std::string_view text = label;
  Interpolation out;
  if (text.starts_with("gmean")) {
    out.kind = InterpolationKind::GeometricMean;
    text.remove_prefix(5);
  } else if (text.starts_with("mean")) {
    out.kind = InterpolationKind::ArithmeticMean;
    text.remove_prefix(4);
  } else {
    throw Error("unknown interpolation '" + label + "' (expected mean or gmean)");
  }
  if (text.empty()) return out;
  if (text.starts_with("_w")) {
    text.remove_prefix(2);
  } else if (text.starts_with(":")) {
    text.remove_prefix(1);
  } else {
    throw Error("unknown interpolation '" + label + "'");
  }
  auto w = detail::parse_double(text);
  if (!w || !(*w >= 0.0 && *w <= 1.0)) {
    throw Error("interpolation weight in '" + label + "' must be a number in [0, 1]");
  }
  out.weight = *w;
  return out;
}

double interpolate(double relevance, double fairness, const Interpolation& how) {
  auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!in_unit(relevance) || !in_unit(fairness)) {
    throw Error("interpolate: inputs must lie in [0, 1]");
  }
  if (!in_unit(how.weight)) throw Error("interpolate: weight must lie in [0, 1]");
  const double w = how.weight;
  if (how.kind == InterpolationKind::ArithmeticMean) {
    if (w == 0.5) return 0.5 * (relevance + fairness);
    return (1.0 - w) * relevance + w * fairness;
  }
  if (w == 0.5) return std::sqrt(relevance * fairness);
  return std::pow(relevance, 1.0 - w) * std::pow(fairness, w);
}

}  // namespace fairdex
