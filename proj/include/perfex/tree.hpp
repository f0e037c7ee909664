#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "perfex/dataset.hpp"
#include "perfex/metrics.hpp"
#include "perfex/splitter.hpp"

namespace perfex {

struct MinSamples {
  double exact = 0.0;
  std::size_t required = 0;
};

// Smallest subset size for which the binomial confidence interval of a
// proportion has width at most `width` at Z-score `z`, using the worst-case
// variance bound p(1-p) <= 1/4: exact = z^2 / width^2, required = ceil(exact).
// Throws std::invalid_argument unless z > 0 and 0 < width <= 1.
MinSamples min_samples(double z, double width);

// Two-sided Z-score for a confidence level in (0, 1), e.g. 0.95 -> 1.95996.
double z_for_confidence(double level);

struct ConfidenceRule {
  double z = 1.96;
  // Maximum confidence-interval width D.
  double width = 0.1;
};

struct StoppingRule {
  std::size_t max_depth = 6;
  // Splits with a smaller metric gap are not made.
  double min_beta = 0.05;
  // When set, each side of a split needs metric support >= min_samples(z, D).
  std::optional<ConfidenceRule> confidence;

  std::size_t min_support() const;
  void validate() const;
};

struct BuildOptions {
  std::size_t alpha = 100;
  std::optional<std::size_t> max_thresholds = 255;
  // 0 resolves via PERFEX_THREADS. The tree does not depend on this value.
  unsigned threads = 1;
  // Keep each leaf's build-table row indices in the tree.
  bool keep_rows = true;
};

enum class Branch { kLeft, kRight };

struct PathStep {
  Condition condition;
  // kLeft when the condition holds.
  Branch branch = Branch::kLeft;
  bool operator==(const PathStep&) const = default;
};

struct LeafStats {
  std::size_t leaf_id = 0;
  std::size_t size = 0;
  MetricValue metric;
  std::vector<PathStep> path;
};

// Nodes are stored in depth-first pre-order; node 0 is the root. Leaf ids
// count leaves in the same order.
struct TreeNode {
  std::optional<Condition> split;
  std::size_t left = 0;
  std::size_t right = 0;
  std::size_t depth = 0;
  std::size_t size = 0;
  MetricValue metric;
  std::size_t leaf_id = 0;
  std::vector<RowIndex> rows;

  bool is_leaf() const { return !split.has_value(); }
};

class MetaTree {
 public:
  MetaTree(FeatureSchema schema, ClassSet classes, MetricSpec metric, StoppingRule stop,
           std::size_t alpha, std::optional<std::size_t> max_thresholds, std::vector<TreeNode> nodes);

  const FeatureSchema& schema() const { return schema_; }
  const ClassSet& classes() const { return classes_; }
  const MetricSpec& metric() const { return metric_; }
  const StoppingRule& stopping() const { return stop_; }
  std::size_t alpha() const { return alpha_; }
  std::optional<std::size_t> max_thresholds() const { return max_thresholds_; }
  std::string fingerprint() const { return schema_fingerprint(schema_, classes_); }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& root() const { return nodes_.front(); }
  std::size_t leaf_count() const { return leaf_nodes_.size(); }
  std::size_t depth() const;
  // Node index of leaf `leaf_id`.
  std::size_t leaf_node(std::size_t leaf_id) const { return leaf_nodes_.at(leaf_id); }

  // Leaf id reached by a row of a table with this tree's schema.
  std::size_t route(const PredictionTable& table, std::size_t row) const;

  // Leaves in id order with the branch decisions leading to them.
  std::vector<LeafStats> leaves() const;

  bool operator==(const MetaTree&) const;

 private:
  FeatureSchema schema_;
  ClassSet classes_;
  MetricSpec metric_;
  StoppingRule stop_;
  std::size_t alpha_;
  std::optional<std::size_t> max_thresholds_;
  std::vector<TreeNode> nodes_;
  std::vector<std::size_t> leaf_nodes_;
};

// Grows a tree top-down with best_split. A node is a leaf when it is at
// max_depth, has no feasible split, or its best gap is below min_beta.
// Throws UndefinedMetricError if the metric is undefined on the whole table.
MetaTree build(const PredictionTable& table, const MetricSpec& metric, const StoppingRule& stop,
               const BuildOptions& options = {});

// Leaf id per row. Throws SchemaError if the table layout differs.
std::vector<std::size_t> assign(const MetaTree& tree, const PredictionTable& table);

inline constexpr int kTreeFormatVersion = 1;

// Canonical JSON (sorted keys, two-space indent). Leaf rows are not stored.
std::string serialize(const MetaTree& tree);
// Throws VersionMismatchError or FormatError.
MetaTree deserialize(const std::string& json);

}  // namespace perfex
