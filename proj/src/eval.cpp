#include "perfex/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json.hpp"

namespace perfex {

namespace {

std::vector<SubsetView> leaf_views(const MetaTree& tree, const PredictionTable& table) {
  const auto leaf_of = assign(tree, table);
  std::vector<std::vector<RowIndex>> rows(tree.leaf_count());
  for (std::size_t i = 0; i < leaf_of.size(); ++i) rows[leaf_of[i]].push_back(static_cast<RowIndex>(i));
  std::vector<SubsetView> views;
  views.reserve(rows.size());
  for (auto& r : rows) views.emplace_back(table, std::move(r));
  return views;
}

std::string fixed2(const std::optional<double>& v) { return v ? format_fixed(*v, 2) : std::string("-"); }

nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

EvaluationReport evaluate_tree(const MetaTree& tree, const MetricSpec& metric, const PredictionTable& build,
                               const PredictionTable& test) {
  const auto build_views = leaf_views(tree, build);
  const auto test_views = leaf_views(tree, test);

  EvaluationReport report;
  double error_sum = 0.0;
  std::size_t compared = 0;
  std::optional<double> lowest, highest;
  for (std::size_t l = 0; l < tree.leaf_count(); ++l) {
    LeafComparison leaf;
    leaf.leaf_id = l;
    leaf.build_size = build_views[l].size();
    leaf.test_size = test_views[l].size();
    leaf.build_value = evaluate(metric, build_views[l]);
    leaf.test_value = evaluate(metric, test_views[l]);
    if (leaf.build_value.defined()) {
      const double e = *leaf.build_value.value;
      lowest = lowest ? std::min(*lowest, e) : e;
      highest = highest ? std::max(*highest, e) : e;
    }
    if (!leaf.test_value.defined()) report.undefined_leaves.push_back(l);
    if (leaf.build_value.defined() && leaf.test_value.defined()) {
      leaf.abs_error = std::abs(*leaf.build_value.value - *leaf.test_value.value);
      error_sum += *leaf.abs_error;
      ++compared;
    }
    report.leaves.push_back(leaf);
  }
  if (compared > 0) report.mae = error_sum / static_cast<double>(compared);
  if (lowest) report.spread = *highest - *lowest;
  return report;
}

std::string EvaluationReport::to_json() const {
  nlohmann::json doc;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& leaf : leaves) {
    rows.push_back({{"leaf", leaf.leaf_id},
                    {"n_build", leaf.build_size},
                    {"n_test", leaf.test_size},
                    {"e_build", optional_number(leaf.build_value.value)},
                    {"e_test", optional_number(leaf.test_value.value)},
                    {"support_build", leaf.build_value.support},
                    {"support_test", leaf.test_value.support},
                    {"abs_err", optional_number(leaf.abs_error)}});
  }
  doc["leaves"] = std::move(rows);
  doc["mae"] = optional_number(mae);
  doc["d"] = spread;
  doc["undefined_leaves"] = undefined_leaves;
  return doc.dump(2) + "\n";
}

std::string EvaluationReport::to_text() const {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%6s %9s %9s %9s %9s %9s\n", "leaf", "n_build", "n_test", "e_build", "e_test",
                "abs_err");
  out += line;
  for (const auto& leaf : leaves) {
    std::snprintf(line, sizeof line, "%6zu %9zu %9zu %9s %9s %9s\n", leaf.leaf_id, leaf.build_size, leaf.test_size,
                  fixed2(leaf.build_value.value).c_str(), fixed2(leaf.test_value.value).c_str(),
                  fixed2(leaf.abs_error).c_str());
    out += line;
  }
  out += "mae " + fixed2(mae) + "\n";
  out += "d " + fixed2(spread) + "\n";
  return out;
}

}  // namespace perfex
