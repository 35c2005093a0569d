#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "duraflow/preprocess.hpp"
#include "duraflow/tree.hpp"

namespace duraflow {

struct ForestParams {
  int n_trees = 100;
  int mtry = 5;  // features sampled per split; floor(sqrt(27))
  int max_depth = 16;
  double min_samples_leaf = 5.0;
  bool bootstrap = true;
  int max_bins = kDefaultMaxBins;

  bool operator==(const ForestParams&) const = default;
};

// Bagged gini trees over two classes: 0 = long, 1 = short.
struct ForestModel {
  ForestParams params;
  std::uint64_t seed = 0;
  std::string schema_fingerprint;
  std::vector<std::string> feature_names;
  BinMap bin_map;
  std::vector<Tree> trees;

  bool operator==(const ForestModel&) const = default;
};

struct ClassPrediction {
  int label = 0;
  std::array<double, 2> proba{};  // {p_long, p_short}
};

// Trees are independent given (data, seed) and may be trained on up to
// `threads` workers without changing the result. Throws SingleClassTraining.
ForestModel train_forest(const EncodedDataset& train, const ForestParams& params,
                         std::uint64_t seed, int threads = 1);

// Mean of per-tree normalized leaf counts. Ties go to label 0 (long).
ClassPrediction predict_forest(const ForestModel& model, std::span<const double> row);

}  // namespace duraflow
