#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace fairdex {

/// Probability mass over a fixed, ordered category set.
///
/// Construction checks that labels are unique, every probability lies in
/// [0, 1], and the total is 1 within 1e-12. Instances are immutable.
class CategoricalDistribution {
 public:
  static constexpr double kMassTolerance = 1e-12;

  CategoricalDistribution(std::vector<std::string> categories, std::vector<double> mass);

  /// 1/|C| everywhere.
  static CategoricalDistribution uniform(std::vector<std::string> categories);

  /// Relative frequencies (no smoothing). Throws if every count is zero.
  static CategoricalDistribution from_counts(std::vector<std::string> categories,
                                             std::span<const std::uint64_t> counts);

  const std::vector<std::string>& categories() const noexcept { return categories_; }
  const std::vector<double>& mass() const noexcept { return mass_; }
  std::size_t size() const noexcept { return mass_.size(); }
  double operator[](std::size_t i) const { return mass_[i]; }
  /// Throws Error for a label outside the category set.
  double probability(const std::string& category) const;

  bool operator==(const CategoricalDistribution&) const = default;

 private:
  std::vector<std::string> categories_;
  std::vector<double> mass_;
};

/// Add-one smoothing: p_i = (count_i + 1) / (total + |C|). Every category
/// ends up with strictly positive mass.
CategoricalDistribution laplace_smooth(std::span<const std::uint64_t> counts,
                                       std::vector<std::string> categories);

/// Keyed variant; keys must be a subset of `categories`, missing keys count 0.
CategoricalDistribution laplace_smooth(const std::map<std::string, std::uint64_t>& counts,
                                       std::vector<std::string> categories);

/// KL(p || q) in nats, with 0 * ln(0 / q) taken as 0.
///
/// Both distributions must share the same ordered category set. A zero in `q`
/// where `p` is positive makes the divergence infinite and is reported as an
/// Error; smoothed inputs never hit that case.
double kl_divergence(const CategoricalDistribution& p, const CategoricalDistribution& q);

}  // namespace fairdex
