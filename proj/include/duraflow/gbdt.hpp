#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "duraflow/preprocess.hpp"
#include "duraflow/tree.hpp"

namespace duraflow {

struct GbdtParams {
  int n_rounds = 500;
  double learning_rate = 0.05;
  int max_leaves = 31;
  int max_depth = -1;
  double min_samples_leaf = 20.0;
  double lambda_l2 = 1.0;
  double min_gain = 1e-7;
  int early_stopping_rounds = 50;  // 0 disables the held-out carve-out
  double validation_fraction = 0.1;
  int max_bins = kDefaultMaxBins;

  bool operator==(const GbdtParams&) const = default;
};

// Squared-loss boosted regressor over durations in minutes.
struct GbdtModel {
  GbdtParams params;
  std::uint64_t seed = 0;
  std::string schema_fingerprint;
  std::vector<std::string> feature_names;
  double base_score = 0.0;
  BinMap bin_map;
  std::vector<Tree> trees;

  bool operator==(const GbdtModel&) const = default;
};

// Per-round diagnostics; index t holds the state after t trees.
struct GbdtTrace {
  std::vector<double> train_mse;
  std::vector<double> valid_rmse;  // empty without early stopping
  std::size_t best_rounds = 0;
};

// Targets are ds.durations. Throws TooFewRows below two rows.
GbdtModel train_gbdt(const EncodedDataset& train, const GbdtParams& params, std::uint64_t seed,
                     GbdtTrace* trace = nullptr);

// base_score + learning_rate * sum of tree outputs, unclipped.
double predict_gbdt_raw(const GbdtModel& model, std::span<const double> row);

// predict_gbdt_raw clipped below at 0 minutes.
double predict_gbdt(const GbdtModel& model, std::span<const double> row);

}  // namespace duraflow
