#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "duraflow/ingest.hpp"
#include "duraflow/timestamp.hpp"

namespace duraflow {

inline constexpr double kDefaultThresholdMinutes = 164.0;

// (end - start) in minutes. Negative when end precedes start.
double compute_duration(const Timestamp& start, const Timestamp& end);

// 1 (short) iff duration < threshold, else 0 (long).
int label_duration(double duration, double threshold = kDefaultThresholdMinutes);

struct TrimResult {
  std::vector<std::size_t> retained;  // ascending input positions
  std::vector<std::size_t> removed;   // ascending; includes non-positive durations
  double lower_cut = 0.0;
  double upper_cut = 0.0;
};

// Drops non-positive and non-finite durations, then keeps the rows with
// lower_cut <= d <= upper_cut where the cuts are the lower_q / upper_q
// quantiles of what remains. Throws TooFewRows below 20 usable rows.
TrimResult trim_outliers(std::span<const double> durations, double lower_q = 0.05,
                         double upper_q = 0.95);

enum class ColumnKind { numeric, boolean, daynight, categorical };

std::string_view to_string(ColumnKind kind);
ColumnKind column_kind_from_string(std::string_view text);

// Trimmed, lower-cased category text. "CALM" and " Calm" normalize equally.
std::string normalize_category(std::string_view text);

// Codes 1..k by descending training frequency, ties broken lexicographically.
// Code 0 is reserved for unknown or unseen text.
class CategoryMap {
 public:
  CategoryMap() = default;
  explicit CategoryMap(std::vector<std::string> categories_by_code);

  static CategoryMap fit(std::span<const std::optional<std::string>> values);

  int encode(std::string_view text) const;
  std::optional<std::string> decode(int code) const;

  std::size_t known() const { return categories_.size(); }
  // Entry i holds the text for code i + 1.
  const std::vector<std::string>& categories() const { return categories_; }

  bool operator==(const CategoryMap& other) const { return categories_ == other.categories_; }

 private:
  std::vector<std::string> categories_;
  std::unordered_map<std::string, int> codes_;
};

struct ColumnDescriptor {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  std::optional<CategoryMap> encoder;  // present iff kind == categorical, once fitted

  bool operator==(const ColumnDescriptor&) const = default;
};

struct FeatureSchema {
  std::vector<ColumnDescriptor> columns;
  std::string target_name = "duration_minutes";

  std::size_t size() const { return columns.size(); }
  std::vector<std::string> names() const;
  std::optional<std::size_t> index_of(std::string_view name) const;
  // Stable hash over names, kinds and category maps.
  std::string fingerprint() const;

  bool operator==(const FeatureSchema&) const = default;
};

struct FeatureOptions {
  bool drop_turning_loop = false;
  bool drop_distance = false;
};

// The modeling columns (27 by default) without fitted encoders.
std::vector<ColumnDescriptor> modeling_columns(const FeatureOptions& options = {});

// Pre-encoding view of the modeling columns. Numeric and boolean columns live
// in `numbers`, day/night and categorical columns in `texts`; the other vector
// of each column is left empty.
struct FeatureTable {
  std::vector<ColumnDescriptor> columns;
  std::vector<std::vector<std::optional<double>>> numbers;
  std::vector<std::vector<std::optional<std::string>>> texts;
  std::vector<std::string> ids;
  std::vector<double> durations;

  std::size_t rows() const { return ids.size(); }
  FeatureTable subset(std::span<const std::size_t> rows) const;
  std::size_t missing_cells() const;
};

// Day/night fields that are neither "day" nor "night" (any case) become absent.
FeatureTable extract_features(std::span<const RawAccidentRecord> records,
                              const FeatureOptions& options = {});

struct ColumnFill {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  double number = 0.0;  // mean (numeric) or mode (boolean)
  std::string text;     // mode (daynight, categorical), normalized for categoricals

  bool operator==(const ColumnFill&) const = default;
};

struct ImputationStats {
  std::vector<ColumnFill> fills;

  bool operator==(const ImputationStats&) const = default;
};

// Throws AllMissingColumn when a column has no observed value.
ImputationStats fit_imputer(const FeatureTable& rows);
FeatureTable apply_imputer(FeatureTable rows, const ImputationStats& stats);

struct EncodedDataset {
  FeatureSchema schema;
  std::vector<double> values;  // row-major, rows() x n_features()
  std::vector<double> durations;
  std::vector<int> labels;
  std::vector<std::string> ids;

  std::size_t rows() const { return durations.size(); }
  std::size_t n_features() const { return schema.size(); }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * n_features(), n_features()};
  }
  double at(std::size_t i, std::size_t j) const { return values[i * n_features() + j]; }
  std::vector<double> column(std::size_t j) const;
  EncodedDataset subset(std::span<const std::size_t> rows) const;
};

FeatureSchema fit_encoder(const FeatureTable& train);

// booleans -> {0,1}; day -> 1, night -> 0; categoricals -> CategoryMap codes;
// numerics pass through. Labels follow label_duration(d, threshold).
// Throws SchemaMismatch when a schema column is absent from the table or a cell
// is still missing.
EncodedDataset apply_encoder(const FeatureTable& rows, const FeatureSchema& schema,
                             double threshold = kDefaultThresholdMinutes);

struct SplitSpec {
  double train_fraction = 0.75;
  std::uint64_t seed = 20160201;
  bool stratified = false;
};

struct SplitIndices {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

// Unstratified: round(train_fraction * n) rows go to train. Stratified: each
// class contributes round(train_fraction * n_class) rows. labels may be empty
// when not stratified.
SplitIndices split_indices(std::size_t n, std::span<const int> labels, const SplitSpec& spec);
std::pair<EncodedDataset, EncodedDataset> split_dataset(const EncodedDataset& ds,
                                                        const SplitSpec& spec);

enum class ThresholdMode { fixed, automatic };

struct PreprocessConfig {
  FeatureOptions features;
  SplitSpec split;
  ThresholdMode threshold_mode = ThresholdMode::fixed;
  double threshold = kDefaultThresholdMinutes;
  // Fit imputation statistics on all retained rows instead of the train split.
  bool impute_on_full_data = false;
  double lower_quantile = 0.05;
  double upper_quantile = 0.95;
};

struct PreprocessArtifacts {
  PreprocessConfig config;
  FeatureSchema schema;
  ImputationStats imputation;
  double threshold = kDefaultThresholdMinutes;
  double lower_cut = 0.0;
  double upper_cut = 0.0;
  std::size_t input_rows = 0;
  std::size_t retained_rows = 0;
};

struct PreprocessOutput {
  PreprocessArtifacts artifacts;
  EncodedDataset train;
  EncodedDataset test;
};

PreprocessOutput preprocess(std::span<const RawAccidentRecord> records,
                            const PreprocessConfig& config = {});

// Applies fitted artifacts to new records (no trimming, no split). Rows with a
// non-positive duration keep it; labels follow the stored threshold.
EncodedDataset encode_records(std::span<const RawAccidentRecord> records,
                              const PreprocessArtifacts& artifacts);

}  // namespace duraflow
