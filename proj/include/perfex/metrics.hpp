#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "perfex/dataset.hpp"

namespace perfex {

enum class MetricKind {
  kAccuracy,
  kPrecision,
  kRecall,
  kF1,
  kWeightedPrecision,
  kWeightedRecall,
  kWeightedF1,
  kEce,
  kMeanMinScore,
};

// A performance metric M over a subset of rows. Class references are held by
// name and resolved against the table's ClassSet at evaluation time.
class MetricSpec {
 public:
  static MetricSpec accuracy();
  static MetricSpec precision(std::string target);
  static MetricSpec recall(std::string target);
  static MetricSpec f1(std::string target);
  static MetricSpec weighted_precision();
  static MetricSpec weighted_recall();
  static MetricSpec weighted_f1();
  static MetricSpec ece(int bins = 10);
  static MetricSpec mean_min_score(std::vector<std::string> score_classes);

  // Accepts `accuracy`, `precision:<class>`, `recall:<class>`, `f1:<class>`,
  // `weighted_precision`, `weighted_recall`, `weighted_f1`, `ece[:<bins>]`,
  // `mean_min_score:<class>,<class>[,...]`. Throws std::invalid_argument.
  static MetricSpec parse(std::string_view text);

  // Canonical form accepted by parse().
  std::string to_string() const;
  // Wording used in explanations, e.g. "accuracy" or "the recall of class b".
  std::string default_phrase() const;

  MetricKind kind() const { return kind_; }
  const std::string& target_class() const { return target_; }
  const std::vector<std::string>& score_classes() const { return score_classes_; }
  int bins() const { return bins_; }
  bool requires_scores() const { return kind_ == MetricKind::kEce || kind_ == MetricKind::kMeanMinScore; }

  // Throws std::invalid_argument if a referenced class is not in `classes`.
  void validate(const ClassSet& classes) const;

  bool operator==(const MetricSpec&) const = default;

 private:
  explicit MetricSpec(MetricKind kind) : kind_(kind) {}

  MetricKind kind_;
  std::string target_;
  std::vector<std::string> score_classes_;
  int bins_ = 0;
};

struct MetricValue {
  std::optional<double> value;
  // Number of rows the metric's confidence interval is governed by.
  std::size_t support = 0;

  bool defined() const { return value.has_value(); }
  bool operator==(const MetricValue&) const = default;
};

// Sufficient statistics of a metric over a multiset of rows. Statistics are
// additive, so the complement of a subset is `total - subset`; the split
// search relies on this to sweep thresholds in a single pass.
class MetricAccumulator {
 public:
  // Throws MissingScoresError / std::invalid_argument when the metric cannot
  // be evaluated on `table`.
  MetricAccumulator(const MetricSpec& metric, const PredictionTable& table);

  void add(RowIndex row);
  void add(const SubsetView& view);
  void clear();
  // Sets this to `total - part`. All three must share metric and table.
  void assign_difference(const MetricAccumulator& total, const MetricAccumulator& part);

  std::size_t count() const { return static_cast<std::size_t>(counts_[0]); }
  MetricValue value() const;

 private:
  MetricKind kind_;
  int bins_ = 0;
  const PredictionTable* table_;
  std::size_t k_;
  ClassId target_ = -1;
  std::vector<ClassId> score_classes_;
  // Layout: [n, correct, true_count[k], pred_count[k], true_positive[k],
  //          bin_count[B], bin_correct[B]].
  std::vector<std::int64_t> counts_;
  // ECE: per-bin confidence sums; mean_min_score: a single running sum.
  std::vector<double> sums_;
};

// Metric value on `view`. Empty views and zero denominators yield an undefined
// value; missing scores throw MissingScoresError.
MetricValue evaluate(const MetricSpec& metric, const SubsetView& view);

}  // namespace perfex
