#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "duraflow/forest.hpp"
#include "duraflow/gbdt.hpp"
#include "duraflow/preprocess.hpp"
#include "duraflow/tree.hpp"

namespace duraflow {

struct ShapVector {
  std::vector<double> phi;
  double base_value = 0.0;
};

// Cover-weighted mean of node_output over the leaves.
double expected_tree_output(const Tree& tree, std::span<const double> node_output);

// Exact path-dependent TreeSHAP for one tree whose scalar output at node i is
// node_output[i] (only leaves are read). Adds scale * phi into `phi`.
// Throws MissingCovers when a node has non-positive cover.
void tree_shap(const Tree& tree, std::span<const double> row, const BinMap& bins,
               std::span<const double> node_output, double scale, std::span<double> phi);

// Explains the unclipped boosted output.
ShapVector tree_shap(const GbdtModel& model, std::span<const double> row);

// Explains the forest probability of class 1 (short).
ShapVector tree_shap(const ForestModel& model, std::span<const double> row);

struct ShapSummary {
  std::vector<std::string> features;
  std::vector<double> mean_abs;      // per feature, schema order
  std::vector<std::size_t> ranking;  // feature indices, descending mean_abs
  std::size_t rows_used = 0;
};

inline constexpr std::size_t kDefaultShapSampleCap = 10000;

// Mean |phi| over min(n, sample_cap) rows; larger datasets are subsampled
// without replacement using `seed`.
ShapSummary shap_summary(const GbdtModel& model, const EncodedDataset& data,
                         std::size_t sample_cap = kDefaultShapSampleCap, std::uint64_t seed = 0,
                         int threads = 1);
ShapSummary shap_summary(const ForestModel& model, const EncodedDataset& data,
                         std::size_t sample_cap = kDefaultShapSampleCap, std::uint64_t seed = 0,
                         int threads = 1);

}  // namespace duraflow
