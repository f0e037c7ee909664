#include "perfex/explain.hpp"

#include <algorithm>
#include <stdexcept>

#include "json.hpp"

namespace perfex {

namespace {

[[noreturn]] void contradiction(const std::string& feature) {
  throw std::logic_error("path admits no value of feature '" + feature + "'");
}

void apply_step(FeatureCondition& fc, const PathStep& step) {
  const double v = step.condition.value;
  const bool left = step.branch == Branch::kLeft;
  if (step.condition.kind == ConditionKind::kLessEqual) {
    if (left) {
      fc.upper = fc.upper ? std::min(*fc.upper, v) : v;
    } else {
      fc.lower = fc.lower ? std::max(*fc.lower, v) : v;
    }
    return;
  }
  if (left) {
    if ((fc.equals && *fc.equals != v) || std::find(fc.excluded.begin(), fc.excluded.end(), v) != fc.excluded.end()) {
      contradiction(fc.name);
    }
    fc.equals = v;
    fc.excluded.clear();
  } else if (fc.equals) {
    if (*fc.equals == v) contradiction(fc.name);
  } else if (std::find(fc.excluded.begin(), fc.excluded.end(), v) == fc.excluded.end()) {
    fc.excluded.insert(std::upper_bound(fc.excluded.begin(), fc.excluded.end(), v), v);
  }
}

// Resolves a binary feature's bounds to a single value. Returns false when
// both values remain possible, so the feature imposes no condition.
bool resolve_binary(FeatureCondition& fc) {
  std::vector<double> allowed;
  for (double x : {0.0, 1.0}) {
    if ((!fc.lower || x > *fc.lower) && (!fc.upper || x <= *fc.upper)) allowed.push_back(x);
  }
  if (allowed.empty()) contradiction(fc.name);
  fc.lower.reset();
  fc.upper.reset();
  if (allowed.size() == 2) return false;
  fc.equals = allowed.front();
  return true;
}

std::string category_name(const FeatureCondition& fc, double id) {
  return fc.categories.at(static_cast<std::size_t>(id));
}

}  // namespace

bool FeatureCondition::holds(double x) const {
  if (lower && !(x > *lower)) return false;
  if (upper && !(x <= *upper)) return false;
  if (equals && x != *equals) return false;
  return std::find(excluded.begin(), excluded.end(), x) == excluded.end();
}

std::string FeatureCondition::to_text() const {
  switch (kind) {
    case FeatureKind::kNumeric: {
      std::string out;
      if (lower) out = name + " > " + format_number(*lower);
      if (upper) out += (out.empty() ? "" : ", ") + name + " <= " + format_number(*upper);
      return out;
    }
    case FeatureKind::kBinary:
      return name + " = " + format_number(*equals);
    case FeatureKind::kCategorical: {
      if (equals) return name + " = " + category_name(*this, *equals);
      if (excluded.size() == 1) return name + " != " + category_name(*this, excluded.front());
      std::string out = name + " not in {";
      for (std::size_t i = 0; i < excluded.size(); ++i) {
        out += (i > 0 ? ", " : "") + category_name(*this, excluded[i]);
      }
      return out + "}";
    }
  }
  return name;
}

ConditionSummary summarize_path(const LeafStats& stats, const FeatureSchema& schema) {
  ConditionSummary summary;
  for (const PathStep& step : stats.path) {
    check_condition(schema, step.condition);
    const std::size_t j = step.condition.feature;
    auto it = std::find_if(summary.begin(), summary.end(), [j](const FeatureCondition& fc) { return fc.feature == j; });
    if (it == summary.end()) {
      FeatureCondition fc;
      fc.feature = j;
      fc.name = schema[j].name;
      fc.kind = schema[j].kind;
      fc.categories = schema[j].categories;
      summary.push_back(std::move(fc));
      it = summary.end() - 1;
    }
    apply_step(*it, step);
  }

  ConditionSummary merged;
  for (auto& fc : summary) {
    if (fc.kind == FeatureKind::kBinary) {
      if (!resolve_binary(fc)) continue;
    } else if (fc.kind == FeatureKind::kNumeric) {
      if (fc.lower && fc.upper && !(*fc.lower < *fc.upper)) contradiction(fc.name);
    } else if (!fc.equals && fc.excluded.size() >= fc.categories.size()) {
      contradiction(fc.name);
    }
    merged.push_back(std::move(fc));
  }
  return merged;
}

bool satisfies(const ConditionSummary& summary, const PredictionTable& table, std::size_t row) {
  return std::all_of(summary.begin(), summary.end(),
                     [&](const FeatureCondition& fc) { return fc.holds(table.value(row, fc.feature)); });
}

std::string render(const LeafStats& leaf, const ConditionSummary& summary, const MetricSpec& metric,
                   std::string_view unit_noun, std::string_view phrase) {
  const std::string unit(unit_noun);
  const std::string wording = phrase.empty() ? metric.default_phrase() : std::string(phrase);
  std::string out = "There are " + std::to_string(leaf.size) + " " + unit + " for which the\n";
  out += "following conditions hold:\n";
  if (summary.empty()) {
    out += "  (no conditions \xE2\x80\x94 all " + unit + ")\n";
  }
  for (const auto& fc : summary) out += "  " + fc.to_text() + "\n";
  const std::string value = leaf.metric.value ? format_fixed(*leaf.metric.value, 2) : std::string("undefined");
  out += "and for these " + unit + " " + wording + " is " + value;
  return out;
}

std::vector<LeafStats> leaves_on(const MetaTree& tree, const PredictionTable& table) {
  const auto leaf_of = assign(tree, table);
  std::vector<std::vector<RowIndex>> rows(tree.leaf_count());
  for (std::size_t i = 0; i < leaf_of.size(); ++i) rows[leaf_of[i]].push_back(static_cast<RowIndex>(i));
  auto stats = tree.leaves();
  for (auto& leaf : stats) {
    const SubsetView view(table, std::move(rows[leaf.leaf_id]));
    leaf.size = view.size();
    leaf.metric = evaluate(tree.metric(), view);
  }
  return stats;
}

std::string explanations_json(const std::vector<LeafStats>& leaves, const FeatureSchema& schema,
                              const MetricSpec& metric) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& leaf : leaves) {
    nlohmann::json conditions = nlohmann::json::array();
    for (const auto& fc : summarize_path(leaf, schema)) conditions.push_back(fc.to_text());
    out.push_back({{"leaf", leaf.leaf_id},
                   {"size", leaf.size},
                   {"conditions", std::move(conditions)},
                   {"metric", metric.to_string()},
                   {"value", leaf.metric.value ? nlohmann::json(*leaf.metric.value) : nlohmann::json(nullptr)},
                   {"support", leaf.metric.support}});
  }
  return out.dump(2) + "\n";
}

}  // namespace perfex
