#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "perfex/dataset.hpp"
#include "perfex/metrics.hpp"
#include "perfex/tree.hpp"

namespace perfex {

struct LeafComparison {
  std::size_t leaf_id = 0;
  std::size_t build_size = 0;
  std::size_t test_size = 0;
  MetricValue build_value;
  MetricValue test_value;
  // |e_build - e_test| when both sides are defined.
  std::optional<double> abs_error;
};

struct EvaluationReport {
  std::vector<LeafComparison> leaves;
  // Mean of abs_error over leaves where it is defined; nullopt if none.
  std::optional<double> mae;
  // max - min of the defined build-side leaf values.
  double spread = 0.0;
  // Leaves whose test-side metric is empty or undefined.
  std::vector<std::size_t> undefined_leaves;

  std::string to_json() const;
  // Columns leaf, n_build, n_test, e_build, e_test, abs_err; footer mae, d.
  std::string to_text() const;
};

// Routes both tables through the tree and compares leaf metrics. Throws
// SchemaError if either table's layout differs from the tree's.
EvaluationReport evaluate_tree(const MetaTree& tree, const MetricSpec& metric, const PredictionTable& build,
                               const PredictionTable& test);

}  // namespace perfex
