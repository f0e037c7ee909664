#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "perfex/dataset.hpp"
#include "perfex/metrics.hpp"
#include "perfex/tree.hpp"

namespace perfex {

// Merged constraints on one feature along a root-to-leaf path.
struct FeatureCondition {
  std::size_t feature = 0;
  std::string name;
  FeatureKind kind = FeatureKind::kNumeric;
  // Numeric: lower < x <= upper.
  std::optional<double> lower;
  std::optional<double> upper;
  // Binary: the resolved value. Categorical: the selected category id.
  std::optional<double> equals;
  // Categorical: category ids ruled out, ascending.
  std::vector<double> excluded;
  // Categorical: the schema's category names.
  std::vector<std::string> categories;

  bool holds(double x) const;
  // E.g. "length > 10.77, length <= 12.39" or "colour not in {b, r}".
  std::string to_text() const;
};

using ConditionSummary = std::vector<FeatureCondition>;

// Tightest per-feature constraints implied by the path, in order of each
// feature's first appearance. Throws std::logic_error for a path that admits
// no point, which only a faulty builder produces.
ConditionSummary summarize_path(const LeafStats& stats, const FeatureSchema& schema);

bool satisfies(const ConditionSummary& summary, const PredictionTable& table, std::size_t row);

// Text block describing one leaf:
//
//   There are 134 datapoints for which the
//   following conditions hold:
//     length > 10.77, length <= 12.39
//   and for these datapoints accuracy is 0.68
//
// No trailing newline.
std::string render(const LeafStats& leaf, const ConditionSummary& summary, const MetricSpec& metric,
                   std::string_view unit_noun = "datapoints", std::string_view phrase = {});

// Leaf statistics recomputed on `table` (routing through the tree).
std::vector<LeafStats> leaves_on(const MetaTree& tree, const PredictionTable& table);

// JSON array of {leaf, size, conditions[], metric, value, support}.
std::string explanations_json(const std::vector<LeafStats>& leaves, const FeatureSchema& schema,
                              const MetricSpec& metric);

}  // namespace perfex
