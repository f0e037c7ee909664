#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace perfex {

using RowIndex = std::uint32_t;
using ClassId = int;

enum class FeatureKind { kNumeric, kBinary, kCategorical };

std::string_view to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(std::string_view text);

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kNumeric;
  // Admissible values of a categorical feature; a cell stores the position.
  std::vector<std::string> categories;

  std::optional<std::size_t> category_id(std::string_view value) const;
  bool operator==(const FeatureSpec&) const = default;
};

class FeatureSchema {
 public:
  FeatureSchema() = default;
  // Throws SchemaError on duplicate names, an empty feature list or a
  // categorical feature without categories.
  explicit FeatureSchema(std::vector<FeatureSpec> features);

  std::size_t size() const { return features_.size(); }
  const FeatureSpec& operator[](std::size_t j) const { return features_[j]; }
  const std::vector<FeatureSpec>& features() const { return features_; }
  std::optional<std::size_t> index_of(std::string_view name) const;

  bool operator==(const FeatureSchema&) const = default;

 private:
  std::vector<FeatureSpec> features_;
};

class ClassSet {
 public:
  ClassSet() = default;
  // Throws SchemaError unless there are at least two distinct labels.
  explicit ClassSet(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  const std::string& operator[](std::size_t c) const { return labels_[c]; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<ClassId> index_of(std::string_view label) const;

  bool operator==(const ClassSet&) const = default;

 private:
  std::vector<std::string> labels_;
};

// Hex digest identifying a (schema, class set) pair. Trees record it so that
// routing a table with a different layout fails loudly.
std::string schema_fingerprint(const FeatureSchema& schema, const ClassSet& classes);

// The engine's view of a base classifier: features, true labels, predicted
// labels and optionally per-class scores. Immutable after construction.
class PredictionTable {
 public:
  // `columns[j][i]` is feature j of row i; categorical cells hold the category
  // position. `scores`, when present, is row-major with k entries per row.
  PredictionTable(FeatureSchema schema, ClassSet classes,
                  std::vector<std::vector<double>> columns,
                  std::vector<ClassId> true_labels,
                  std::vector<ClassId> predicted_labels,
                  std::optional<std::vector<double>> scores = std::nullopt,
                  bool scores_are_probabilities = true);

  const FeatureSchema& schema() const { return schema_; }
  const ClassSet& classes() const { return classes_; }
  std::size_t rows() const { return true_.size(); }
  std::size_t num_features() const { return schema_.size(); }
  std::size_t num_classes() const { return classes_.size(); }

  double value(std::size_t row, std::size_t feature) const { return columns_[feature][row]; }
  std::span<const double> column(std::size_t feature) const { return columns_[feature]; }
  ClassId true_label(std::size_t row) const { return true_[row]; }
  ClassId predicted_label(std::size_t row) const { return pred_[row]; }

  bool has_scores() const { return !scores_.empty(); }
  bool scores_are_probabilities() const { return probabilities_; }
  std::span<const double> scores(std::size_t row) const {
    return std::span<const double>(scores_).subspan(row * classes_.size(), classes_.size());
  }

  std::string fingerprint() const { return schema_fingerprint(schema_, classes_); }

  // Rows `indices` in the given order, as a new table.
  PredictionTable select(std::span<const RowIndex> indices) const;

 private:
  FeatureSchema schema_;
  ClassSet classes_;
  std::vector<std::vector<double>> columns_;
  std::vector<ClassId> true_;
  std::vector<ClassId> pred_;
  std::vector<double> scores_;
  bool probabilities_ = true;
};

enum class ConditionKind { kLessEqual, kEqual };

std::string_view to_string(ConditionKind kind);

// `x[feature] <= value` for numeric and binary features, `x[feature] == value`
// (a category position) for categorical ones.
struct Condition {
  std::size_t feature = 0;
  ConditionKind kind = ConditionKind::kLessEqual;
  double value = 0.0;

  bool holds(double x) const { return kind == ConditionKind::kLessEqual ? x <= value : x == value; }
  bool holds(const PredictionTable& table, std::size_t row) const {
    return holds(table.value(row, feature));
  }
  bool operator==(const Condition&) const = default;
};

// A subset of a table's rows in ascending row order. Holds a non-owning
// reference; the table must outlive the view.
class SubsetView {
 public:
  explicit SubsetView(const PredictionTable& table);
  // Throws std::invalid_argument unless indices are strictly increasing and in range.
  SubsetView(const PredictionTable& table, std::vector<RowIndex> indices);

  const PredictionTable& table() const { return *table_; }
  std::span<const RowIndex> indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }

 private:
  struct Unchecked {};
  SubsetView(const PredictionTable& table, std::vector<RowIndex> indices, Unchecked)
      : table_(&table), indices_(std::move(indices)) {}
  friend std::pair<SubsetView, SubsetView> split_rows(const SubsetView&, const Condition&);

  const PredictionTable* table_;
  std::vector<RowIndex> indices_;
};

// Throws std::invalid_argument if the feature index is out of range or the
// condition kind does not match the feature kind.
void check_condition(const FeatureSchema& schema, const Condition& condition);

// First view holds the rows satisfying the condition, second the rest. Row
// order is preserved on both sides.
std::pair<SubsetView, SubsetView> split_rows(const SubsetView& view, const Condition& condition);

struct LoadOptions {
  // Inferred from the data when absent.
  std::optional<FeatureSchema> schema;
  // Taken from the score columns, or the sorted label union, when absent.
  std::optional<ClassSet> classes;
  bool scores_are_probabilities = true;
};

PredictionTable load_table(std::istream& in, const LoadOptions& options = {});
PredictionTable load_table_file(const std::string& path, const LoadOptions& options = {});
void write_table(std::ostream& out, const PredictionTable& table);
void write_table_file(const std::string& path, const PredictionTable& table);

// Shortest decimal text that parses back to exactly `x`.
std::string format_number(double x);
// Fixed-point text with `decimals` digits, independent of the C locale.
std::string format_fixed(double x, int decimals);

}  // namespace perfex
