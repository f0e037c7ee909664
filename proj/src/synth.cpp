#include "perfex/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace perfex::synth {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t kFlipStream = 0x666c6970;   // "flip"
constexpr std::uint64_t kSplitStream = 0x73706c74;  // "splt"

std::vector<double> softmax(const std::vector<double>& logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

ClassId first_argmax(const std::vector<double>& values) {
  return static_cast<ClassId>(std::max_element(values.begin(), values.end()) - values.begin());
}

double squared_distance(std::span<const double> a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

std::size_t dimension_of(const BuiltinClassifier& classifier) {
  struct Visitor {
    std::size_t operator()(const ArgmaxDensity& c) const { return c.means.empty() ? 0 : c.means.front().size(); }
    std::size_t operator()(const NearestCentroid& c) const {
      return c.centroids.empty() ? 0 : c.centroids.front().size();
    }
    std::size_t operator()(const AxisThreshold& c) const { return c.feature + 1; }
    std::size_t operator()(const Cart& c) const { return c.num_features(); }
  };
  return std::visit(Visitor{}, classifier);
}

const std::vector<std::string>& classes_of(const BuiltinClassifier& classifier) {
  return std::visit(
      [](const auto& c) -> const std::vector<std::string>& {
        if constexpr (std::is_same_v<std::decay_t<decltype(c)>, Cart>) {
          return c.classes();
        } else {
          return c.classes;
        }
      },
      classifier);
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(~stream));
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("bound must be positive");
  const std::uint64_t threshold = (0 - bound) % bound;
  while (true) {
    const std::uint64_t r = engine_();
    if (r >= threshold) return r % bound;
  }
}

std::vector<double> LabeledData::row(std::size_t i) const {
  std::vector<double> x(columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) x[j] = columns[j][i];
  return x;
}

LabeledData LabeledData::select(std::span<const std::size_t> indices) const {
  LabeledData out{feature_names, classes, std::vector<std::vector<double>>(columns.size()), {}};
  for (std::size_t i : indices) {
    for (std::size_t j = 0; j < columns.size(); ++j) out.columns[j].push_back(columns[j].at(i));
    out.labels.push_back(labels.at(i));
  }
  return out;
}

LabeledData generate_blobs(const std::vector<GaussianClass>& spec, std::uint64_t seed,
                           std::vector<std::string> feature_names) {
  if (spec.empty()) throw std::invalid_argument("blob spec is empty");
  const std::size_t dims = spec.front().mean.size();
  if (dims == 0) throw std::invalid_argument("blob means must have at least one coordinate");
  if (feature_names.empty()) {
    for (std::size_t d = 0; d < dims; ++d) feature_names.push_back("x" + std::to_string(d));
  }
  if (feature_names.size() != dims) throw std::invalid_argument("feature name count differs from dimension");

  LabeledData data;
  data.feature_names = std::move(feature_names);
  data.columns.resize(dims);
  for (std::size_t c = 0; c < spec.size(); ++c) {
    const auto& cls = spec[c];
    if (cls.mean.size() != dims) throw std::invalid_argument("blob means differ in dimension");
    if (!(cls.sigma > 0.0)) throw std::invalid_argument("blob sigma must be positive");
    if (cls.count == 0) throw std::invalid_argument("blob count must be positive");
    data.classes.push_back(cls.label);
    Rng rng(stream_seed(seed, c));
    for (std::size_t i = 0; i < cls.count; ++i) {
      for (std::size_t d = 0; d < dims; ++d) data.columns[d].push_back(cls.mean[d] + cls.sigma * rng.normal());
      data.labels.push_back(static_cast<ClassId>(c));
    }
  }
  return data;
}

LabeledData generate_two_gaussian(double delta, std::size_t n_per_class, std::uint64_t seed) {
  return generate_blobs({{"0", {10.0}, 2.0, n_per_class}, {"1", {10.0 + delta}, 2.0, n_per_class}}, seed, {"x"});
}

std::vector<GaussianClass> paper_blobs_spec(std::size_t total) {
  const std::vector<std::vector<double>> centres = {{10.0, 10.0}, {20.0, 12.0}, {15.0, 15.0}};
  std::vector<GaussianClass> spec;
  for (std::size_t c = 0; c < centres.size(); ++c) {
    const std::size_t count = total / centres.size() + (c < total % centres.size() ? 1 : 0);
    spec.push_back({std::to_string(c), centres[c], 3.0, count});
  }
  return spec;
}

LabeledData generate_example2d(std::uint64_t seed, std::size_t n_per_class) {
  LabeledData data = generate_blobs({{"red", {10.0, 10.0}, 2.0, n_per_class}, {"blue", {30.0, 10.0}, 2.0, n_per_class}},
                                    seed, {"x", "y"});
  Rng flips(stream_seed(seed, kFlipStream));
  for (std::size_t i = 0; i < data.rows(); ++i) {
    if (data.columns[1][i] > 12.0 && flips.uniform() < 0.5) data.labels[i] = 1 - data.labels[i];
  }
  return data;
}

StratifiedSplit stratified_split(std::span<const ClassId> labels, std::uint64_t seed) {
  ClassId classes = 0;
  for (ClassId y : labels) classes = std::max(classes, y + 1);
  StratifiedSplit split;
  for (ClassId c = 0; c < classes; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) members.push_back(i);
    }
    Rng rng(stream_seed(seed, kSplitStream + static_cast<std::uint64_t>(c)));
    for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.below(i)]);
    const std::size_t n_train = (members.size() + 1) / 2;
    const std::size_t n_test1 = (members.size() - n_train + 1) / 2;
    split.train.insert(split.train.end(), members.begin(), members.begin() + n_train);
    split.test1.insert(split.test1.end(), members.begin() + n_train, members.begin() + n_train + n_test1);
    split.test2.insert(split.test2.end(), members.begin() + n_train + n_test1, members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test1.begin(), split.test1.end());
  std::sort(split.test2.begin(), split.test2.end());
  return split;
}

ArgmaxDensity ArgmaxDensity::two_gaussian(double mean0, double mean1, double sigma) {
  return ArgmaxDensity{{"0", "1"}, {{mean0}, {mean1}}, {sigma, sigma}};
}

RowPrediction ArgmaxDensity::predict(std::span<const double> x) const {
  std::vector<double> log_density(means.size());
  for (std::size_t c = 0; c < means.size(); ++c) {
    const double s = sigmas[c];
    log_density[c] = -squared_distance(x, means[c]) / (2.0 * s * s) - static_cast<double>(x.size()) * std::log(s);
  }
  return {first_argmax(log_density), softmax(log_density)};
}

NearestCentroid NearestCentroid::fit(const LabeledData& data) {
  NearestCentroid model{data.classes, std::vector<std::vector<double>>(data.classes.size(),
                                                                        std::vector<double>(data.columns.size(), 0.0))};
  std::vector<std::size_t> counts(data.classes.size(), 0);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto c = static_cast<std::size_t>(data.labels[i]);
    ++counts[c];
    for (std::size_t j = 0; j < data.columns.size(); ++j) model.centroids[c][j] += data.columns[j][i];
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) throw std::invalid_argument("class '" + data.classes[c] + "' has no training rows");
    for (double& v : model.centroids[c]) v /= static_cast<double>(counts[c]);
  }
  return model;
}

RowPrediction NearestCentroid::predict(std::span<const double> x) const {
  std::vector<double> logits(centroids.size());
  for (std::size_t c = 0; c < centroids.size(); ++c) logits[c] = -std::sqrt(squared_distance(x, centroids[c]));
  return {first_argmax(logits), softmax(logits)};
}

RowPrediction AxisThreshold::predict(std::span<const double> x) const {
  RowPrediction out;
  out.label = x[feature] < threshold ? below : above;
  out.scores.assign(classes.size(), 0.0);
  out.scores[static_cast<std::size_t>(out.label)] = 1.0;
  return out;
}

Cart Cart::fit(const LabeledData& data, std::size_t max_depth) {
  if (data.rows() == 0) throw std::invalid_argument("cannot fit CART on an empty dataset");
  Cart model;
  model.classes_ = data.classes;
  model.num_features_ = data.columns.size();
  std::vector<std::size_t> rows(data.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  model.grow(data, std::move(rows), 0, max_depth);
  return model;
}

std::size_t Cart::grow(const LabeledData& data, std::vector<std::size_t> rows, std::size_t depth,
                       std::size_t max_depth) {
  const std::size_t k = classes_.size();
  const std::size_t index = nodes_.size();
  nodes_.emplace_back();
  nodes_[index].depth = depth;

  std::vector<double> counts(k, 0.0);
  for (std::size_t r : rows) counts[static_cast<std::size_t>(data.labels[r])] += 1.0;
  const double n = static_cast<double>(rows.size());
  nodes_[index].distribution.resize(k);
  for (std::size_t c = 0; c < k; ++c) nodes_[index].distribution[c] = counts[c] / n;

  const auto pure = std::count_if(counts.begin(), counts.end(), [](double v) { return v > 0; }) <= 1;
  if (depth >= max_depth || pure || rows.size() < 2) return index;

  // n * weighted Gini of a split = n_l - S_l / n_l + n_r - S_r / n_r with S the
  // sum of squared class counts, so minimising it means maximising S_l/n_l + S_r/n_r.
  double parent_score = 0.0;
  for (double c : counts) parent_score += c * c;
  parent_score /= n;
  double best_score = parent_score;
  std::optional<std::pair<std::size_t, double>> best;
  for (std::size_t j = 0; j < data.columns.size(); ++j) {
    const auto& column = data.columns[j];
    std::vector<std::size_t> sorted = rows;
    std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) { return column[a] < column[b]; });
    std::vector<double> left(k, 0.0);
    double left_sq = 0.0;
    double right_sq = 0.0;
    for (double c : counts) right_sq += c * c;
    std::vector<double> right = counts;
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
      const auto c = static_cast<std::size_t>(data.labels[sorted[i]]);
      left_sq += 2.0 * left[c] + 1.0;
      left[c] += 1.0;
      right_sq -= 2.0 * right[c] - 1.0;
      right[c] -= 1.0;
      if (column[sorted[i]] == column[sorted[i + 1]]) continue;
      const double nl = static_cast<double>(i + 1);
      const double nr = n - nl;
      const double score = left_sq / nl + right_sq / nr;
      if (score > best_score + 1e-12) {
        best_score = score;
        best = std::make_pair(j, column[sorted[i]]);
      }
    }
  }
  if (!best) return index;

  std::vector<std::size_t> left_rows, right_rows;
  for (std::size_t r : rows) (data.columns[best->first][r] <= best->second ? left_rows : right_rows).push_back(r);
  nodes_[index].leaf = false;
  nodes_[index].feature = best->first;
  nodes_[index].threshold = best->second;
  const std::size_t left = grow(data, std::move(left_rows), depth + 1, max_depth);
  const std::size_t right = grow(data, std::move(right_rows), depth + 1, max_depth);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

RowPrediction Cart::predict(std::span<const double> x) const {
  std::size_t index = 0;
  while (!nodes_[index].leaf) {
    index = x[nodes_[index].feature] <= nodes_[index].threshold ? nodes_[index].left : nodes_[index].right;
  }
  return {first_argmax(nodes_[index].distribution), nodes_[index].distribution};
}

std::size_t Cart::depth() const {
  std::size_t d = 0;
  for (const auto& node : nodes_) d = std::max(d, node.depth);
  return d;
}

PredictionTable predict(const BuiltinClassifier& classifier, const LabeledData& data) {
  const auto& classes = classes_of(classifier);
  if (classes != data.classes) throw std::invalid_argument("classifier classes differ from the dataset classes");
  if (dimension_of(classifier) > data.columns.size() ||
      (!std::holds_alternative<AxisThreshold>(classifier) && dimension_of(classifier) != data.columns.size())) {
    throw std::invalid_argument("classifier expects " + std::to_string(dimension_of(classifier)) +
                                " features, dataset has " + std::to_string(data.columns.size()));
  }
  const std::size_t n = data.rows();
  std::vector<ClassId> predicted(n);
  std::vector<double> scores;
  scores.reserve(n * classes.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = data.row(i);
    const RowPrediction p = std::visit([&](const auto& c) { return c.predict(x); }, classifier);
    predicted[i] = p.label;
    scores.insert(scores.end(), p.scores.begin(), p.scores.end());
  }
  std::vector<FeatureSpec> specs;
  for (const auto& name : data.feature_names) specs.push_back({name, FeatureKind::kNumeric, {}});
  return PredictionTable(FeatureSchema(std::move(specs)), ClassSet(classes), data.columns, data.labels,
                         std::move(predicted), std::move(scores));
}

}  // namespace perfex::synth
