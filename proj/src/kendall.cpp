#include "fairdex/kendall.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <set>
#include <vector>

#include "fairdex/errors.hpp"

namespace fairdex {

namespace {

// Number of pairs tied within runs of equal values in an already sorted sequence.
template <class Eq>
std::int64_t tied_pairs(std::size_t n, Eq equal) {
  std::int64_t pairs = 0;
  std::size_t run = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i < n && equal(i - 1, i)) {
      ++run;
    } else {
      pairs += static_cast<std::int64_t>(run) * static_cast<std::int64_t>(run - 1) / 2;
      run = 1;
    }
  }
  return pairs;
}

// Stable merge sort on `v`, returning the number of inversions (swaps).
std::int64_t sort_count_swaps(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                              std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = sort_count_swaps(v, buf, lo, mid) + sort_count_swaps(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("kendall_tau_b: inputs differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw Error("kendall_tau_b: need at least two items");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw Error("kendall_tau_b: non-finite score");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return y[a] < y[b];
  });

  const std::int64_t ties_x = tied_pairs(n, [&](std::size_t a, std::size_t b) {
    return x[order[a]] == x[order[b]];
  });
  const std::int64_t ties_xy = tied_pairs(n, [&](std::size_t a, std::size_t b) {
    return x[order[a]] == x[order[b]] && y[order[a]] == y[order[b]];
  });

  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  std::vector<double> buf(n);
  const std::int64_t swaps = sort_count_swaps(ys, buf, 0, n);
  const std::int64_t ties_y = tied_pairs(n, [&](std::size_t a, std::size_t b) { return ys[a] == ys[b]; });

  const std::int64_t total = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  // concordant - discordant
  const std::int64_t s = total - ties_x - ties_y + ties_xy - 2 * swaps;
  const std::int64_t untied_x = total - ties_x;
  const std::int64_t untied_y = total - ties_y;
  if (untied_x == 0 || untied_y == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(s) /
         std::sqrt(static_cast<double>(untied_x) * static_cast<double>(untied_y));
}

double kendall_tau(std::span<const std::string> ranking_a, std::span<const std::string> ranking_b) {
  if (ranking_a.size() != ranking_b.size()) throw Error("kendall_tau: rankings differ in length");
  std::map<std::string, double> a;
  std::map<std::string, double> b;
  const auto n = static_cast<double>(ranking_a.size());
  for (std::size_t i = 0; i < ranking_a.size(); ++i) {
    if (!a.emplace(ranking_a[i], n - static_cast<double>(i)).second) {
      throw Error("kendall_tau: duplicate tag '" + ranking_a[i] + "'");
    }
    if (!b.emplace(ranking_b[i], n - static_cast<double>(i)).second) {
      throw Error("kendall_tau: duplicate tag '" + ranking_b[i] + "'");
    }
  }
  return kendall_tau(a, b);
}

double kendall_tau(const std::map<std::string, double>& scores_a,
                   const std::map<std::string, double>& scores_b) {
  if (scores_a.size() != scores_b.size()) throw Error("kendall_tau: tag sets differ");
  std::vector<double> x;
  std::vector<double> y;
  x.reserve(scores_a.size());
  y.reserve(scores_a.size());
  for (auto ia = scores_a.begin(), ib = scores_b.begin(); ia != scores_a.end(); ++ia, ++ib) {
    if (ia->first != ib->first) {
      throw Error("kendall_tau: tag sets differ ('" + ia->first + "' vs '" + ib->first + "')");
    }
    x.push_back(ia->second);
    y.push_back(ib->second);
  }
  return kendall_tau_b(x, y);
}

}  // namespace fairdex
