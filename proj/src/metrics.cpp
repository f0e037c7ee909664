#include "perfex/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "perfex/error.hpp"

namespace perfex {

namespace {

constexpr std::size_t kN = 0;
constexpr std::size_t kCorrect = 1;
constexpr std::size_t kPerClass = 2;

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    parts.emplace_back(text.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return parts;
}

std::optional<double> ratio(std::int64_t numerator, std::int64_t denominator) {
  if (denominator == 0) return std::nullopt;
  return static_cast<double>(numerator) / static_cast<double>(denominator);
}

std::optional<double> harmonic_mean(std::optional<double> p, std::optional<double> r) {
  if (!p || !r || *p + *r == 0.0) return std::nullopt;
  return 2.0 * *p * *r / (*p + *r);
}

// Bin of a confidence in [0,1]; the last bin is closed on the right.
std::size_t ece_bin(double confidence, int bins) {
  const auto b = static_cast<std::size_t>(std::floor(confidence * bins));
  return std::min(b, static_cast<std::size_t>(bins - 1));
}

}  // namespace

MetricSpec MetricSpec::accuracy() { return MetricSpec(MetricKind::kAccuracy); }

MetricSpec MetricSpec::precision(std::string target) {
  MetricSpec m(MetricKind::kPrecision);
  m.target_ = std::move(target);
  return m;
}

MetricSpec MetricSpec::recall(std::string target) {
  MetricSpec m(MetricKind::kRecall);
  m.target_ = std::move(target);
  return m;
}

MetricSpec MetricSpec::f1(std::string target) {
  MetricSpec m(MetricKind::kF1);
  m.target_ = std::move(target);
  return m;
}

MetricSpec MetricSpec::weighted_precision() { return MetricSpec(MetricKind::kWeightedPrecision); }
MetricSpec MetricSpec::weighted_recall() { return MetricSpec(MetricKind::kWeightedRecall); }
MetricSpec MetricSpec::weighted_f1() { return MetricSpec(MetricKind::kWeightedF1); }

MetricSpec MetricSpec::ece(int bins) {
  if (bins < 1) throw std::invalid_argument("ece needs at least one bin");
  MetricSpec m(MetricKind::kEce);
  m.bins_ = bins;
  return m;
}

MetricSpec MetricSpec::mean_min_score(std::vector<std::string> score_classes) {
  if (score_classes.size() < 2) throw std::invalid_argument("mean_min_score needs at least two classes");
  for (std::size_t i = 0; i < score_classes.size(); ++i) {
    if (score_classes[i].empty()) throw std::invalid_argument("mean_min_score: empty class name");
    for (std::size_t j = 0; j < i; ++j) {
      if (score_classes[i] == score_classes[j]) throw std::invalid_argument("mean_min_score: duplicate class");
    }
  }
  MetricSpec m(MetricKind::kMeanMinScore);
  m.score_classes_ = std::move(score_classes);
  return m;
}

MetricSpec MetricSpec::parse(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  const bool has_arg = colon != std::string_view::npos;
  const std::string_view arg = has_arg ? text.substr(colon + 1) : std::string_view{};
  auto need_arg = [&] {
    if (!has_arg || arg.empty()) throw std::invalid_argument("metric '" + std::string(name) + "' needs an argument");
  };
  auto no_arg = [&] {
    if (has_arg) throw std::invalid_argument("metric '" + std::string(name) + "' takes no argument");
  };

  if (name == "accuracy") return no_arg(), accuracy();
  if (name == "weighted_precision") return no_arg(), weighted_precision();
  if (name == "weighted_recall") return no_arg(), weighted_recall();
  if (name == "weighted_f1") return no_arg(), weighted_f1();
  if (name == "precision") return need_arg(), precision(std::string(arg));
  if (name == "recall") return need_arg(), recall(std::string(arg));
  if (name == "f1") return need_arg(), f1(std::string(arg));
  if (name == "ece") {
    if (!has_arg) return ece();
    int bins = 0;
    const auto [end, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), bins);
    if (ec != std::errc() || end != arg.data() + arg.size()) {
      throw std::invalid_argument("ece: bin count must be an integer");
    }
    return ece(bins);
  }
  if (name == "mean_min_score") return need_arg(), mean_min_score(split_list(arg));
  throw std::invalid_argument("unknown metric '" + std::string(text) + "'");
}

std::string MetricSpec::to_string() const {
  switch (kind_) {
    case MetricKind::kAccuracy:
      return "accuracy";
    case MetricKind::kPrecision:
      return "precision:" + target_;
    case MetricKind::kRecall:
      return "recall:" + target_;
    case MetricKind::kF1:
      return "f1:" + target_;
    case MetricKind::kWeightedPrecision:
      return "weighted_precision";
    case MetricKind::kWeightedRecall:
      return "weighted_recall";
    case MetricKind::kWeightedF1:
      return "weighted_f1";
    case MetricKind::kEce:
      return "ece:" + std::to_string(bins_);
    case MetricKind::kMeanMinScore: {
      std::string out = "mean_min_score:";
      for (std::size_t i = 0; i < score_classes_.size(); ++i) {
        if (i > 0) out += ",";
        out += score_classes_[i];
      }
      return out;
    }
  }
  return "accuracy";
}

std::string MetricSpec::default_phrase() const {
  switch (kind_) {
    case MetricKind::kAccuracy:
      return "accuracy";
    case MetricKind::kPrecision:
      return "the precision of class " + target_;
    case MetricKind::kRecall:
      return "the recall of class " + target_;
    case MetricKind::kF1:
      return "the f1-score of class " + target_;
    case MetricKind::kWeightedPrecision:
      return "weighted precision";
    case MetricKind::kWeightedRecall:
      return "weighted recall";
    case MetricKind::kWeightedF1:
      return "weighted f1-score";
    case MetricKind::kEce:
      return "expected calibration error";
    case MetricKind::kMeanMinScore:
      return "the mean minimum score";
  }
  return to_string();
}

void MetricSpec::validate(const ClassSet& classes) const {
  if (!target_.empty() && !classes.index_of(target_)) {
    throw std::invalid_argument("metric refers to unknown class '" + target_ + "'");
  }
  for (const auto& c : score_classes_) {
    if (!classes.index_of(c)) throw std::invalid_argument("metric refers to unknown class '" + c + "'");
  }
}

MetricAccumulator::MetricAccumulator(const MetricSpec& metric, const PredictionTable& table)
    : kind_(metric.kind()), bins_(metric.bins()), table_(&table), k_(table.num_classes()) {
  metric.validate(table.classes());
  if (metric.requires_scores() && !table.has_scores()) {
    throw MissingScoresError("metric '" + metric.to_string() + "' needs score columns");
  }
  if (!metric.target_class().empty()) target_ = *table.classes().index_of(metric.target_class());
  for (const auto& c : metric.score_classes()) score_classes_.push_back(*table.classes().index_of(c));
  const std::size_t bins = kind_ == MetricKind::kEce ? static_cast<std::size_t>(bins_) : 0;
  counts_.assign(kPerClass + 3 * k_ + 2 * bins, 0);
  if (kind_ == MetricKind::kEce) sums_.assign(bins, 0.0);
  if (kind_ == MetricKind::kMeanMinScore) sums_.assign(1, 0.0);
}

void MetricAccumulator::add(RowIndex row) {
  const ClassId y = table_->true_label(row);
  const ClassId yhat = table_->predicted_label(row);
  const bool correct = y == yhat;
  ++counts_[kN];
  counts_[kCorrect] += correct;
  ++counts_[kPerClass + y];
  ++counts_[kPerClass + k_ + yhat];
  if (correct) ++counts_[kPerClass + 2 * k_ + y];
  if (kind_ == MetricKind::kEce) {
    const auto scores = table_->scores(row);
    const double confidence = *std::max_element(scores.begin(), scores.end());
    const std::size_t b = ece_bin(confidence, bins_);
    const std::size_t base = kPerClass + 3 * k_;
    ++counts_[base + b];
    counts_[base + bins_ + b] += correct;
    sums_[b] += confidence;
  } else if (kind_ == MetricKind::kMeanMinScore) {
    const auto scores = table_->scores(row);
    double lowest = scores[score_classes_.front()];
    for (ClassId c : score_classes_) lowest = std::min(lowest, scores[c]);
    sums_[0] += lowest;
  }
}

void MetricAccumulator::add(const SubsetView& view) {
  for (RowIndex row : view.indices()) add(row);
}

void MetricAccumulator::clear() {
  std::fill(counts_.begin(), counts_.end(), 0);
  std::fill(sums_.begin(), sums_.end(), 0.0);
}

void MetricAccumulator::assign_difference(const MetricAccumulator& total, const MetricAccumulator& part) {
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] = total.counts_[i] - part.counts_[i];
  for (std::size_t i = 0; i < sums_.size(); ++i) sums_[i] = total.sums_[i] - part.sums_[i];
}

MetricValue MetricAccumulator::value() const {
  const std::int64_t n = counts_[kN];
  const auto true_count = [&](std::size_t c) { return counts_[kPerClass + c]; };
  const auto pred_count = [&](std::size_t c) { return counts_[kPerClass + k_ + c]; };
  const auto true_positive = [&](std::size_t c) { return counts_[kPerClass + 2 * k_ + c]; };
  const auto precision_of = [&](std::size_t c) { return ratio(true_positive(c), pred_count(c)); };
  const auto recall_of = [&](std::size_t c) { return ratio(true_positive(c), true_count(c)); };
  const auto f1_of = [&](std::size_t c) { return harmonic_mean(precision_of(c), recall_of(c)); };
  const auto whole = static_cast<std::size_t>(n);

  auto weighted = [&](auto&& per_class) -> MetricValue {
    if (n == 0) return {std::nullopt, 0};
    double sum = 0.0;
    for (std::size_t c = 0; c < k_; ++c) {
      if (true_count(c) == 0) continue;
      const std::optional<double> v = per_class(c);
      if (!v) return {std::nullopt, whole};
      sum += static_cast<double>(true_count(c)) * *v;
    }
    return {sum / static_cast<double>(n), whole};
  };

  const auto t = static_cast<std::size_t>(target_);
  switch (kind_) {
    case MetricKind::kAccuracy:
      return {ratio(counts_[kCorrect], n), whole};
    case MetricKind::kPrecision:
      return {precision_of(t), static_cast<std::size_t>(pred_count(t))};
    case MetricKind::kRecall:
      return {recall_of(t), static_cast<std::size_t>(true_count(t))};
    case MetricKind::kF1:
      return {f1_of(t), static_cast<std::size_t>(std::min(pred_count(t), true_count(t)))};
    case MetricKind::kWeightedPrecision:
      return weighted(precision_of);
    case MetricKind::kWeightedRecall:
      return weighted(recall_of);
    case MetricKind::kWeightedF1:
      return weighted(f1_of);
    case MetricKind::kEce: {
      if (n == 0) return {std::nullopt, 0};
      const std::size_t base = kPerClass + 3 * k_;
      double sum = 0.0;
      for (std::size_t b = 0; b < static_cast<std::size_t>(bins_); ++b) {
        const std::int64_t count = counts_[base + b];
        if (count == 0) continue;
        const double accuracy = static_cast<double>(counts_[base + bins_ + b]) / static_cast<double>(count);
        const double confidence = sums_[b] / static_cast<double>(count);
        sum += static_cast<double>(count) / static_cast<double>(n) * std::abs(accuracy - confidence);
      }
      return {sum, whole};
    }
    case MetricKind::kMeanMinScore:
      if (n == 0) return {std::nullopt, 0};
      return {sums_[0] / static_cast<double>(n), whole};
  }
  return {};
}

MetricValue evaluate(const MetricSpec& metric, const SubsetView& view) {
  MetricAccumulator acc(metric, view.table());
  acc.add(view);
  return acc.value();
}

}  // namespace perfex
