#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "perfex/dataset.hpp"
#include "perfex/metrics.hpp"

namespace perfex {

// A split condition: `le` on numeric/binary features, `eq` on categorical.
using SplitCandidate = Condition;

// Candidates whose metric gaps differ by less than this are ties; the
// earlier one in enumeration order wins.
inline constexpr double kBetaTieTolerance = 1e-12;

struct SearchConfig {
  // Minimum number of rows on each side of a split.
  std::size_t alpha = 100;
  // Minimum metric support on each side (see MetricValue::support).
  std::size_t min_support = 0;
  // Numeric features with more than max_thresholds + 1 unique values only
  // try this many quantile thresholds. nullopt tries every unique value.
  std::optional<std::size_t> max_thresholds = 255;
  // Worker threads for candidate evaluation; 0 resolves via PERFEX_THREADS.
  unsigned threads = 1;
};

struct SplitResult {
  SplitCandidate candidate;
  SubsetView left;
  SubsetView right;
  MetricValue left_value;
  MetricValue right_value;
  double beta = 0.0;
};

// Thresholds tried for a numeric/binary feature given its values in the view,
// sorted ascending (duplicates included).
std::vector<double> candidate_thresholds(const std::vector<double>& sorted_values,
                                         std::optional<std::size_t> max_thresholds);

// Every candidate the search considers, ordered by feature index, then value.
std::vector<SplitCandidate> enumerate_candidates(const SubsetView& view, const SearchConfig& config);

// Feasible candidate with the largest metric gap |e_left - e_right|, or
// nullopt when none exists or every feasible gap is zero. Feasible means both
// sides hold at least `alpha` rows, have a defined metric and reach
// `min_support`. The result does not depend on `config.threads`.
std::optional<SplitResult> best_split(const SubsetView& view, const MetricSpec& metric,
                                      const SearchConfig& config);

}  // namespace perfex
