#include "perfex/splitter.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "perfex/parallel.hpp"

namespace perfex {

namespace {

struct ScoredCandidate {
  double beta;
  SplitCandidate candidate;
};

struct SortedColumn {
  std::vector<double> values;
  std::vector<RowIndex> rows;
};

// Rows of the view ordered by feature value; equal values keep row order.
SortedColumn sort_by_feature(const SubsetView& view, std::size_t feature) {
  const auto column = view.table().column(feature);
  std::vector<RowIndex> rows(view.indices().begin(), view.indices().end());
  std::stable_sort(rows.begin(), rows.end(), [&](RowIndex a, RowIndex b) { return column[a] < column[b]; });
  SortedColumn sorted;
  sorted.rows = std::move(rows);
  sorted.values.reserve(sorted.rows.size());
  for (RowIndex r : sorted.rows) sorted.values.push_back(column[r]);
  return sorted;
}

std::vector<double> present_categories(const SubsetView& view, std::size_t feature) {
  const auto& spec = view.table().schema()[feature];
  std::vector<bool> seen(spec.categories.size(), false);
  const auto column = view.table().column(feature);
  for (RowIndex r : view.indices()) seen[static_cast<std::size_t>(column[r])] = true;
  std::vector<double> present;
  for (std::size_t c = 0; c < seen.size(); ++c) {
    if (seen[c]) present.push_back(static_cast<double>(c));
  }
  return present;
}

class FeatureScorer {
 public:
  FeatureScorer(const SubsetView& view, const MetricSpec& metric, const SearchConfig& config,
                const MetricAccumulator& total)
      : view_(view), metric_(metric), config_(config), total_(total) {}

  std::vector<ScoredCandidate> score(std::size_t feature) const {
    if (view_.table().schema()[feature].kind == FeatureKind::kCategorical) return score_categorical(feature);
    return score_ordered(feature);
  }

 private:
  // Records the candidate if both sides are feasible.
  void consider(const SplitCandidate& candidate, const MetricAccumulator& left, const MetricAccumulator& right,
                std::vector<ScoredCandidate>& out) const {
    if (left.count() < config_.alpha || right.count() < config_.alpha) return;
    const MetricValue l = left.value();
    const MetricValue r = right.value();
    if (!l.defined() || !r.defined()) return;
    if (l.support < config_.min_support || r.support < config_.min_support) return;
    out.push_back({std::abs(*l.value - *r.value), candidate});
  }

  std::vector<ScoredCandidate> score_ordered(std::size_t feature) const {
    const SortedColumn sorted = sort_by_feature(view_, feature);
    const std::vector<double> thresholds = candidate_thresholds(sorted.values, config_.max_thresholds);
    std::vector<ScoredCandidate> out;
    MetricAccumulator left(metric_, view_.table());
    MetricAccumulator right(metric_, view_.table());
    std::size_t next = 0;
    const std::size_t n = sorted.rows.size();
    for (std::size_t i = 0; i < n && next < thresholds.size(); ++i) {
      left.add(sorted.rows[i]);
      const double v = sorted.values[i];
      if (i + 1 < n && sorted.values[i + 1] == v) continue;
      if (v != thresholds[next]) continue;
      ++next;
      right.assign_difference(total_, left);
      consider({feature, ConditionKind::kLessEqual, v}, left, right, out);
    }
    return out;
  }

  std::vector<ScoredCandidate> score_categorical(std::size_t feature) const {
    const auto& table = view_.table();
    const auto column = table.column(feature);
    const std::size_t categories = table.schema()[feature].categories.size();
    std::vector<MetricAccumulator> per_category(categories, MetricAccumulator(metric_, table));
    for (RowIndex r : view_.indices()) per_category[static_cast<std::size_t>(column[r])].add(r);
    std::vector<ScoredCandidate> out;
    MetricAccumulator right(metric_, table);
    for (std::size_t c = 0; c < categories; ++c) {
      if (per_category[c].count() == 0) continue;
      right.assign_difference(total_, per_category[c]);
      consider({feature, ConditionKind::kEqual, static_cast<double>(c)}, per_category[c], right, out);
    }
    return out;
  }

  const SubsetView& view_;
  const MetricSpec& metric_;
  const SearchConfig& config_;
  const MetricAccumulator& total_;
};

}  // namespace

std::vector<double> candidate_thresholds(const std::vector<double>& sorted_values,
                                         std::optional<std::size_t> max_thresholds) {
  std::vector<double> unique;
  for (double v : sorted_values) {
    if (unique.empty() || unique.back() != v) unique.push_back(v);
  }
  if (!max_thresholds || unique.size() <= *max_thresholds + 1) return unique;

  // Lower empirical quantiles: the q-th threshold leaves at least
  // q/(cap+1) of the rows on the left.
  const std::size_t cap = *max_thresholds;
  const std::size_t n = sorted_values.size();
  std::vector<double> thresholds;
  thresholds.reserve(cap);
  for (std::size_t q = 1; q <= cap; ++q) {
    const std::size_t index = (q * n + cap) / (cap + 1) - 1;
    const double v = sorted_values[index];
    if (thresholds.empty() || thresholds.back() != v) thresholds.push_back(v);
  }
  return thresholds;
}

std::vector<SplitCandidate> enumerate_candidates(const SubsetView& view, const SearchConfig& config) {
  std::vector<SplitCandidate> candidates;
  const auto& schema = view.table().schema();
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (schema[j].kind == FeatureKind::kCategorical) {
      for (double c : present_categories(view, j)) candidates.push_back({j, ConditionKind::kEqual, c});
    } else {
      for (double v : candidate_thresholds(sort_by_feature(view, j).values, config.max_thresholds)) {
        candidates.push_back({j, ConditionKind::kLessEqual, v});
      }
    }
  }
  return candidates;
}

std::optional<SplitResult> best_split(const SubsetView& view, const MetricSpec& metric,
                                      const SearchConfig& config) {
  const auto& table = view.table();
  MetricAccumulator total(metric, table);
  total.add(view);

  const std::size_t m = table.num_features();
  std::vector<std::vector<ScoredCandidate>> per_feature(m);
  const FeatureScorer scorer(view, metric, config, total);
  parallel_for(m, resolve_threads(config.threads), [&](std::size_t j) { per_feature[j] = scorer.score(j); });

  // Reduce in enumeration order so the winner is independent of scheduling.
  std::optional<SplitCandidate> best;
  double best_beta = 0.0;
  for (const auto& scored : per_feature) {
    for (const auto& s : scored) {
      if (s.beta > best_beta + kBetaTieTolerance) {
        best_beta = s.beta;
        best = s.candidate;
      }
    }
  }
  if (!best) return std::nullopt;

  auto [left, right] = split_rows(view, *best);
  MetricValue left_value = evaluate(metric, left);
  MetricValue right_value = evaluate(metric, right);
  const double beta = std::abs(*left_value.value - *right_value.value);
  return SplitResult{*best, std::move(left), std::move(right), left_value, right_value, beta};
}

}  // namespace perfex
