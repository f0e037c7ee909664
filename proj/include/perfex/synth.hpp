#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "perfex/dataset.hpp"

namespace perfex::synth {

// Seeds for independent streams derived from one user seed (splitmix64).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream);

// Portable random source: std::mt19937_64 is fully specified by the
// standard, the std distributions are not, so sampling is done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Standard normal (Box-Muller, one variate per call).
  double normal();
  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
};

// Labelled feature matrix without predictions; all features numeric.
struct LabeledData {
  std::vector<std::string> feature_names;
  std::vector<std::string> classes;
  std::vector<std::vector<double>> columns;
  std::vector<ClassId> labels;

  std::size_t rows() const { return labels.size(); }
  std::vector<double> row(std::size_t i) const;
  LabeledData select(std::span<const std::size_t> indices) const;
};

// One isotropic Gaussian class.
struct GaussianClass {
  std::string label;
  std::vector<double> mean;
  double sigma = 1.0;
  std::size_t count = 0;
};

// Samples each class from its own stream. Throws std::invalid_argument on
// sigma <= 0, a zero count or inconsistent dimensions.
LabeledData generate_blobs(const std::vector<GaussianClass>& spec, std::uint64_t seed,
                           std::vector<std::string> feature_names = {});

// One feature x: class "0" ~ N(10, 2^2), class "1" ~ N(10 + delta, 2^2).
LabeledData generate_two_gaussian(double delta, std::size_t n_per_class, std::uint64_t seed);

// Three overlapping blobs, centres (10,10), (20,12), (15,15), sigma 3,
// `total` rows split as evenly as possible.
std::vector<GaussianClass> paper_blobs_spec(std::size_t total = 10000);

// Two blobs "red" at (10,10) and "blue" at (30,10), sigma 2, with labels of
// points whose y exceeds 12 flipped with probability 1/2.
LabeledData generate_example2d(std::uint64_t seed, std::size_t n_per_class = 150);

// Per-class shuffled 50/25/25 partition; each part is in ascending row order.
struct StratifiedSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test1;
  std::vector<std::size_t> test2;
};
StratifiedSplit stratified_split(std::span<const ClassId> labels, std::uint64_t seed);

struct RowPrediction {
  ClassId label = 0;
  std::vector<double> scores;
};

// argmax_i N(x; mean_i, sigma_i^2 I); scores are the normalised densities.
struct ArgmaxDensity {
  std::vector<std::string> classes;
  std::vector<std::vector<double>> means;
  std::vector<double> sigmas;

  static ArgmaxDensity two_gaussian(double mean0, double mean1, double sigma);
  RowPrediction predict(std::span<const double> x) const;
};

// Closest class mean; scores are a softmax of negative distances.
struct NearestCentroid {
  std::vector<std::string> classes;
  std::vector<std::vector<double>> centroids;

  static NearestCentroid fit(const LabeledData& data);
  RowPrediction predict(std::span<const double> x) const;
};

// Predicts `below` when x[feature] < threshold, else `above`; hard scores.
struct AxisThreshold {
  std::vector<std::string> classes;
  std::size_t feature = 0;
  double threshold = 0.0;
  ClassId below = 0;
  ClassId above = 1;

  RowPrediction predict(std::span<const double> x) const;
};

// Depth-limited CART with Gini impurity and `x <= v` splits; scores are the
// class frequencies of the training rows in the leaf.
class Cart {
 public:
  static Cart fit(const LabeledData& data, std::size_t max_depth);
  RowPrediction predict(std::span<const double> x) const;
  const std::vector<std::string>& classes() const { return classes_; }
  std::size_t num_features() const { return num_features_; }
  std::size_t depth() const;

 private:
  struct Node {
    bool leaf = true;
    std::size_t feature = 0;
    double threshold = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
    std::size_t depth = 0;
    std::vector<double> distribution;
  };
  std::size_t grow(const LabeledData& data, std::vector<std::size_t> rows, std::size_t depth, std::size_t max_depth);

  std::vector<std::string> classes_;
  std::size_t num_features_ = 0;
  std::vector<Node> nodes_;
};

using BuiltinClassifier = std::variant<ArgmaxDensity, NearestCentroid, AxisThreshold, Cart>;

// Fills predictions and scores for every row. Throws std::invalid_argument
// on a feature-dimension or class mismatch.
PredictionTable predict(const BuiltinClassifier& classifier, const LabeledData& data);

}  // namespace perfex::synth
