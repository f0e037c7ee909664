#pragma once

// Naive reference implementations used as test oracles. Nothing here calls
// into the metric or split-search code under test; only the table accessors.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "perfex/dataset.hpp"
#include "perfex/metrics.hpp"

namespace oracle {

using perfex::PredictionTable;
using perfex::RowIndex;

struct Value {
  std::optional<double> value;
  std::size_t support = 0;
};

inline std::vector<RowIndex> all_rows(const PredictionTable& t) {
  std::vector<RowIndex> rows(t.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<RowIndex>(i);
  return rows;
}

inline std::size_t count_if_rows(const std::vector<RowIndex>& rows, auto pred) {
  std::size_t n = 0;
  for (RowIndex r : rows) n += pred(r) ? 1 : 0;
  return n;
}

inline std::optional<double> precision(const PredictionTable& t, const std::vector<RowIndex>& rows, int c) {
  const std::size_t predicted = count_if_rows(rows, [&](RowIndex r) { return t.predicted_label(r) == c; });
  const std::size_t hit =
      count_if_rows(rows, [&](RowIndex r) { return t.predicted_label(r) == c && t.true_label(r) == c; });
  if (predicted == 0) return std::nullopt;
  return static_cast<double>(hit) / static_cast<double>(predicted);
}

inline std::optional<double> recall(const PredictionTable& t, const std::vector<RowIndex>& rows, int c) {
  const std::size_t actual = count_if_rows(rows, [&](RowIndex r) { return t.true_label(r) == c; });
  const std::size_t hit =
      count_if_rows(rows, [&](RowIndex r) { return t.predicted_label(r) == c && t.true_label(r) == c; });
  if (actual == 0) return std::nullopt;
  return static_cast<double>(hit) / static_cast<double>(actual);
}

inline std::optional<double> f1(const PredictionTable& t, const std::vector<RowIndex>& rows, int c) {
  const auto p = precision(t, rows, c);
  const auto r = recall(t, rows, c);
  if (!p || !r || *p + *r == 0.0) return std::nullopt;
  return 2.0 * *p * *r / (*p + *r);
}

// Reference value of `metric` on `rows` of `t`.
inline Value evaluate(const perfex::MetricSpec& metric, const PredictionTable& t, const std::vector<RowIndex>& rows) {
  using perfex::MetricKind;
  const std::size_t n = rows.size();
  const int k = static_cast<int>(t.num_classes());
  auto class_id = [&](const std::string& name) { return *t.classes().index_of(name); };
  if (n == 0) return {std::nullopt, 0};

  auto weighted = [&](auto per_class) -> Value {
    double sum = 0.0;
    for (int c = 0; c < k; ++c) {
      const std::size_t actual = count_if_rows(rows, [&](RowIndex r) { return t.true_label(r) == c; });
      if (actual == 0) continue;
      const auto v = per_class(c);
      if (!v) return {std::nullopt, n};
      sum += static_cast<double>(actual) * *v;
    }
    return {sum / static_cast<double>(n), n};
  };

  switch (metric.kind()) {
    case MetricKind::kAccuracy: {
      const std::size_t ok = count_if_rows(rows, [&](RowIndex r) { return t.true_label(r) == t.predicted_label(r); });
      return {static_cast<double>(ok) / static_cast<double>(n), n};
    }
    case MetricKind::kPrecision: {
      const int c = class_id(metric.target_class());
      return {precision(t, rows, c), count_if_rows(rows, [&](RowIndex r) { return t.predicted_label(r) == c; })};
    }
    case MetricKind::kRecall: {
      const int c = class_id(metric.target_class());
      return {recall(t, rows, c), count_if_rows(rows, [&](RowIndex r) { return t.true_label(r) == c; })};
    }
    case MetricKind::kF1: {
      const int c = class_id(metric.target_class());
      const std::size_t predicted = count_if_rows(rows, [&](RowIndex r) { return t.predicted_label(r) == c; });
      const std::size_t actual = count_if_rows(rows, [&](RowIndex r) { return t.true_label(r) == c; });
      return {f1(t, rows, c), std::min(predicted, actual)};
    }
    case MetricKind::kWeightedPrecision:
      return weighted([&](int c) { return precision(t, rows, c); });
    case MetricKind::kWeightedRecall:
      return weighted([&](int c) { return recall(t, rows, c); });
    case MetricKind::kWeightedF1:
      return weighted([&](int c) { return f1(t, rows, c); });
    case MetricKind::kEce: {
      const int bins = metric.bins();
      double total = 0.0;
      for (int b = 0; b < bins; ++b) {
        const double lo = static_cast<double>(b) / bins;
        const double hi = static_cast<double>(b + 1) / bins;
        std::size_t members = 0, ok = 0;
        double conf_sum = 0.0;
        for (RowIndex r : rows) {
          const auto s = t.scores(r);
          const double conf = *std::max_element(s.begin(), s.end());
          const bool in_bin = conf >= lo && (b == bins - 1 ? conf <= hi : conf < hi);
          if (!in_bin) continue;
          ++members;
          ok += t.true_label(r) == t.predicted_label(r) ? 1 : 0;
          conf_sum += conf;
        }
        if (members == 0) continue;
        const double acc = static_cast<double>(ok) / static_cast<double>(members);
        const double conf = conf_sum / static_cast<double>(members);
        total += static_cast<double>(members) / static_cast<double>(n) * std::abs(acc - conf);
      }
      return {total, n};
    }
    case MetricKind::kMeanMinScore: {
      double sum = 0.0;
      for (RowIndex r : rows) {
        double lowest = 2.0;
        for (const auto& name : metric.score_classes()) lowest = std::min(lowest, t.scores(r)[class_id(name)]);
        sum += lowest;
      }
      return {sum / static_cast<double>(n), n};
    }
  }
  return {};
}

struct Split {
  std::size_t feature = 0;
  double value = 0.0;
  double beta = 0.0;
};

// Exhaustive search: every unique value of every feature, sides recomputed
// from scratch. Strict improvement by more than 1e-12 over the running best.
inline std::optional<Split> brute_force_split(const PredictionTable& t, const std::vector<RowIndex>& rows,
                                              const perfex::MetricSpec& metric, std::size_t alpha,
                                              std::size_t min_support) {
  std::optional<Split> best;
  double best_beta = 0.0;
  for (std::size_t j = 0; j < t.num_features(); ++j) {
    const bool categorical = t.schema()[j].kind == perfex::FeatureKind::kCategorical;
    std::set<double> values;
    for (RowIndex r : rows) values.insert(t.value(r, j));
    for (double v : values) {
      std::vector<RowIndex> left, right;
      for (RowIndex r : rows) {
        const double x = t.value(r, j);
        ((categorical ? x == v : x <= v) ? left : right).push_back(r);
      }
      if (left.size() < alpha || right.size() < alpha) continue;
      const Value a = evaluate(metric, t, left);
      const Value b = evaluate(metric, t, right);
      if (!a.value || !b.value || a.support < min_support || b.support < min_support) continue;
      const double beta = std::abs(*a.value - *b.value);
      if (beta > best_beta + 1e-12) {
        best_beta = beta;
        best = Split{j, v, beta};
      }
    }
  }
  return best;
}

struct RandomTableOptions {
  std::size_t rows = 50;
  std::size_t features = 3;
  std::size_t classes = 3;
  // Number of distinct numeric values drawn per feature; small values force ties.
  int levels = 12;
};

// Mixed-kind table with random labels, predictions and normalised scores.
inline PredictionTable random_table(std::mt19937_64& rng, const RandomTableOptions& opt) {
  std::uniform_int_distribution<int> kind_pick(0, 2);
  std::vector<perfex::FeatureSpec> specs;
  std::vector<std::vector<double>> columns(opt.features, std::vector<double>(opt.rows));
  for (std::size_t j = 0; j < opt.features; ++j) {
    perfex::FeatureSpec spec;
    spec.name = "f" + std::to_string(j);
    const int kind = kind_pick(rng);
    if (kind == 1) {
      spec.kind = perfex::FeatureKind::kBinary;
      std::uniform_int_distribution<int> bit(0, 1);
      for (auto& x : columns[j]) x = bit(rng);
    } else if (kind == 2) {
      spec.kind = perfex::FeatureKind::kCategorical;
      spec.categories = {"a", "b", "c", "d"};
      std::uniform_int_distribution<int> cat(0, 3);
      for (auto& x : columns[j]) x = cat(rng);
    } else {
      std::uniform_int_distribution<int> level(0, opt.levels - 1);
      for (auto& x : columns[j]) x = level(rng) * 0.5 - 1.0;
    }
    specs.push_back(std::move(spec));
  }
  std::vector<std::string> names;
  for (std::size_t c = 0; c < opt.classes; ++c) names.push_back("c" + std::to_string(c));
  std::uniform_int_distribution<int> label(0, static_cast<int>(opt.classes) - 1);
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  std::vector<int> y(opt.rows), yhat(opt.rows);
  std::vector<double> scores(opt.rows * opt.classes);
  for (std::size_t i = 0; i < opt.rows; ++i) {
    y[i] = label(rng);
    yhat[i] = label(rng);
    double sum = 0.0;
    for (std::size_t c = 0; c < opt.classes; ++c) sum += scores[i * opt.classes + c] = unit(rng);
    for (std::size_t c = 0; c < opt.classes; ++c) scores[i * opt.classes + c] /= sum;
  }
  return PredictionTable(perfex::FeatureSchema(std::move(specs)), perfex::ClassSet(names), std::move(columns),
                         std::move(y), std::move(yhat), std::move(scores));
}

}  // namespace oracle
