#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "duraflow/rng.hpp"

namespace duraflow {

inline constexpr int kDefaultMaxBins = 255;

// Ascending bin edges for one feature. A value's bin is the number of edges
// strictly below it. Columns with at most max_bins distinct values get one bin
// per distinct value (edges at midpoints); wider columns get max_bins - 1 edges
// at interpolated quantiles of the distinct values.
std::vector<double> build_bins(std::span<const double> values, int max_bins = kDefaultMaxBins);

struct BinMap {
  std::vector<std::vector<double>> edges;  // one entry per feature

  std::size_t n_features() const { return edges.size(); }
  std::size_t n_bins(std::size_t feature) const { return edges[feature].size() + 1; }
  std::uint8_t bin(std::size_t feature, double value) const;
  std::vector<std::uint8_t> bin_row(std::span<const double> row) const;

  bool operator==(const BinMap&) const = default;
};

// values is row-major with n_features columns.
BinMap build_bin_map(std::span<const double> values, std::size_t n_features,
                     int max_bins = kDefaultMaxBins);

// Column-major bin indices.
class BinnedMatrix {
 public:
  BinnedMatrix() = default;
  BinnedMatrix(const BinMap& map, std::span<const double> values, std::size_t n_rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return n_bins_.size(); }
  std::size_t n_bins(std::size_t feature) const { return n_bins_[feature]; }
  std::uint8_t at(std::size_t row, std::size_t feature) const { return bins_[feature * rows_ + row]; }
  std::span<const std::uint8_t> column(std::size_t feature) const {
    return {bins_.data() + feature * rows_, rows_};
  }

  // Direct construction for tests and small hand-built problems.
  static BinnedMatrix from_columns(std::vector<std::vector<std::uint8_t>> columns,
                                   std::vector<std::size_t> n_bins);

 private:
  std::size_t rows_ = 0;
  std::vector<std::size_t> n_bins_;
  std::vector<std::uint8_t> bins_;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  std::uint32_t bin_threshold = 0;  // go left iff bin <= bin_threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  double cover = 0.0;  // training samples reaching the node

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

// Flat node array, root at index 0, children stored after their parent.
// Every node carries value_dim values: class counts {long, short} for
// classification trees, the scalar output for regression trees. Only leaf
// values are used for prediction.
struct Tree {
  int value_dim = 1;
  std::vector<TreeNode> nodes;
  std::vector<double> values;

  std::span<const double> value(std::size_t node) const {
    return {values.data() + node * static_cast<std::size_t>(value_dim),
            static_cast<std::size_t>(value_dim)};
  }
  std::size_t leaf_count() const;
  int depth() const;
  std::size_t find_leaf(std::span<const double> row, const BinMap& bins) const;
  std::size_t find_leaf(const BinnedMatrix& bins, std::size_t row) const;
  std::size_t find_leaf_binned(std::span<const std::uint8_t> binned_row) const;

  bool operator==(const Tree&) const = default;
};

std::span<const double> predict_tree(const Tree& tree, std::span<const double> row,
                                     const BinMap& bins);

enum class Impurity { gini, sq_loss };
enum class GrowthPolicy { leaf_wise, depth_wise };

struct GrowParams {
  int max_depth = -1;   // < 0: unlimited
  int max_leaves = 0;   // 0: unlimited, otherwise >= 2
  double min_samples_leaf = 1.0;
  double min_gain = 1e-7;
  double lambda_l2 = 0.0;
  Impurity impurity = Impurity::sq_loss;
  GrowthPolicy policy = GrowthPolicy::leaf_wise;
  int features_per_split = 0;  // 0: all features
};

// Throws InvalidArgument on out-of-range settings.
void validate(const GrowParams& params);

// Per-bin sums. For gini, g holds the class-1 weight and n the total weight;
// for squared loss, g/h are gradient/hessian sums.
struct HistBin {
  double g = 0.0;
  double h = 0.0;
  double n = 0.0;
};

// One histogram per feature; features not considered at a node stay empty.
using NodeHistogram = std::vector<std::vector<HistBin>>;

struct SplitCandidate {
  std::size_t feature = 0;
  std::uint32_t threshold = 0;
  double gain = 0.0;

  bool operator==(const SplitCandidate&) const = default;
};

double gini_impurity(double class1, double total);

// Scans the listed features in ascending order. Gini: weighted impurity
// decrease. Squared loss: GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l). Returns none
// when the node is too small, no split keeps min_samples_leaf on both sides, or
// the best gain is below min_gain. Equal gains keep the lower (feature, bin).
std::optional<SplitCandidate> best_split(const NodeHistogram& histogram,
                                         std::span<const std::size_t> features,
                                         const GrowParams& params);

// Per-row inputs to tree growth. Rows with zero weight do not participate.
// Gini: grad holds the 0/1 label; hess is ignored. Squared loss: gradient and
// hessian of each row (weights multiply both).
struct GrowTargets {
  std::span<const double> grad;
  std::span<const double> hess;
  std::span<const double> weight;  // empty: every row has weight 1
};

struct GrowResult {
  Tree tree;
  std::vector<std::int32_t> leaf_of_row;  // -1 for rows with zero weight
};

// Best-gain-first (leaf-wise) or FIFO (depth-wise) growth. rng is required when
// features_per_split samples a subset.
GrowResult grow_tree(const BinnedMatrix& bins, const GrowTargets& targets, const GrowParams& params,
                     Rng* rng = nullptr);

// Graphviz export, one statement per line. Split labels show the raw-value
// threshold "name <= edge".
std::string to_dot(const Tree& tree, const BinMap& bins, std::span<const std::string> feature_names,
                   int max_depth = -1);

}  // namespace duraflow
