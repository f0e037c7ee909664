#pragma once

// Small hand-built tables shared by several test files.

#include <string>
#include <vector>

#include "perfex/dataset.hpp"

namespace fixtures {

// z in {-5..-1, 1..5}; on z < 0 rows -5 and -2 are correct, on z > 0 every
// row but z = 5 is correct. Accuracy 0.4 on the left half, 0.8 on the right.
inline perfex::PredictionTable sign_table() {
  const std::vector<double> z = {-5, -4, -3, -2, -1, 1, 2, 3, 4, 5};
  const std::vector<bool> correct = {true, false, false, true, false, true, true, true, true, false};
  std::vector<int> y(z.size()), yhat(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    y[i] = static_cast<int>(i % 2);
    yhat[i] = correct[i] ? y[i] : 1 - y[i];
  }
  return perfex::PredictionTable(perfex::FeatureSchema({{"z", perfex::FeatureKind::kNumeric, {}}}),
                                 perfex::ClassSet({"a", "b"}), {z}, y, yhat);
}

// One numeric feature; correctness is fixed per row by `correct`.
inline perfex::PredictionTable correctness_table(const std::vector<double>& x, const std::vector<bool>& correct) {
  std::vector<int> y(x.size(), 0), yhat(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) yhat[i] = correct[i] ? 0 : 1;
  return perfex::PredictionTable(perfex::FeatureSchema({{"x", perfex::FeatureKind::kNumeric, {}}}),
                                 perfex::ClassSet({"a", "b"}), {x}, y, yhat);
}

}  // namespace fixtures
