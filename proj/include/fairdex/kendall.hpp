#pragma once

#include <map>
#include <span>
#include <string>

namespace fairdex {

/// Kendall's tau-b between two paired score vectors, tie-aware.
///
/// Runs in O(n log n) (Knight's merge-sort formulation). Returns NaN when
/// either side is constant, since tau-b is undefined there.
double kendall_tau_b(std::span<const double> x, std::span<const double> y);

/// Tau between two orderings of the same tags (best first, no ties).
double kendall_tau(std::span<const std::string> ranking_a, std::span<const std::string> ranking_b);

/// Tau-b between two score tables over the same tag set.
double kendall_tau(const std::map<std::string, double>& scores_a,
                   const std::map<std::string, double>& scores_b);

}  // namespace fairdex
