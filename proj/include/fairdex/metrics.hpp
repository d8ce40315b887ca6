#pragma once

#include <span>
#include <string>
#include <vector>

#include "fairdex/corpus_io.hpp"

namespace fairdex {

struct NormalizedScores {
  std::vector<double> values;
  // Set when every input was equal; all values are then 0.5.
  bool degenerate = false;
};

/// Min-max rescaling onto [0, 1]: (x - min) / (max - min).
NormalizedScores minmax_normalize(std::span<const double> values);

/// F_i = 1 - N[kl]_i over one comparison batch: the least divergent system
/// gets 1, the most divergent 0.
NormalizedScores fairness_scores(std::span<const double> kl_values);

/// Fraction of the top R positions holding relevant documents, R = |relevant|.
/// Positions past the end of a short ranking count as non-relevant. Doc ids in
/// `ranked_docs` are assumed unique.
double r_precision(std::span<const std::string> ranked_docs, const DocSet& relevant);

enum class InterpolationKind { ArithmeticMean, GeometricMean };

struct Interpolation {
  InterpolationKind kind = InterpolationKind::ArithmeticMean;
  // Weight on fairness; relevance gets 1 - weight.
  double weight = 0.5;

  static Interpolation mean(double weight = 0.5) { return {InterpolationKind::ArithmeticMean, weight}; }
  static Interpolation gmean(double weight = 0.5) { return {InterpolationKind::GeometricMean, weight}; }

  /// "mean" / "gmean" at the default weight, otherwise e.g. "gmean_w0.25".
  std::string label() const;
  /// Inverse of label(); throws Error on anything else.
  static Interpolation parse(const std::string& label);

  bool operator==(const Interpolation&) const = default;
};

/// Arithmetic: (1 - w) r + w f. Geometric: r^(1 - w) f^w, which is exactly
/// sqrt(r f) at w = 0.5.
double interpolate(double relevance, double fairness, const Interpolation& how);

}  // namespace fairdex
