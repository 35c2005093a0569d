#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>

namespace duraflow {

// rmse/mae/relative_error throw EmptyInput on empty or mismatched input.
double rmse(std::span<const double> actual, std::span<const double> predicted);
double mae(std::span<const double> actual, std::span<const double> predicted);

// Mean of |actual - predicted| / actual. Throws ZeroActual if any actual is 0.
double relative_error(std::span<const double> actual, std::span<const double> predicted);

// Class 1 (short) is the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
};

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

// Per-class scores use zero when a denominator vanishes.
struct ClassificationReport {
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  std::array<ClassScores, 2> per_class{};  // index = label
  ClassScores macro;
  ClassScores weighted;
};

// Throws EmptyInput on empty or mismatched input, InvalidArgument on labels
// outside {0, 1}.
ClassificationReport classification_report(std::span<const int> truth,
                                           std::span<const int> predicted);

}  // namespace duraflow
