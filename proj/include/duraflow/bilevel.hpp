#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "duraflow/forest.hpp"
#include "duraflow/gbdt.hpp"
#include "duraflow/metrics.hpp"
#include "duraflow/preprocess.hpp"

namespace duraflow {

struct PipelineConfig {
  ForestParams forest;
  GbdtParams short_branch;
  GbdtParams long_branch;
  std::uint64_t forest_seed = 1;
  std::uint64_t short_seed = 2;
  std::uint64_t long_seed = 3;
  int threads = 1;
};

struct Provenance {
  std::uint64_t forest_seed = 0;
  std::uint64_t short_seed = 0;
  std::uint64_t long_seed = 0;
  std::string data_hash;
  std::size_t train_rows = 0;
  std::size_t short_rows = 0;
  std::size_t long_rows = 0;

  bool operator==(const Provenance&) const = default;
};

// Classifier routes a row to the short (1) or long (0) branch regressor.
struct BilevelModel {
  ForestModel classifier;
  GbdtModel short_regressor;
  GbdtModel long_regressor;
  double threshold = kDefaultThresholdMinutes;
  FeatureSchema schema;
  Provenance provenance;
  // Present when the model was trained through the CLI; lets raw accident
  // records be encoded at prediction time.
  std::optional<PreprocessArtifacts> preprocessing;
};

// Any callable mapping an encoded row to a class prediction. Used to inject
// oracle or constant classifiers in place of the forest.
using RegimeClassifier = std::function<ClassPrediction(std::span<const double>)>;

RegimeClassifier forest_classifier(const ForestModel& model);

// The classifier sees every row; each branch regressor sees only the rows whose
// true label selects it. Throws SingleClassTraining or EmptyBranch (< 2 rows).
BilevelModel train_bilevel(const EncodedDataset& train, const PipelineConfig& config);

struct BilevelPrediction {
  double minutes = 0.0;
  int branch = 0;
  std::array<double, 2> proba{};
};

BilevelPrediction predict_bilevel(const BilevelModel& model, std::span<const double> row);
BilevelPrediction predict_bilevel(const RegimeClassifier& classifier, const GbdtModel& short_regressor,
                                  const GbdtModel& long_regressor, std::span<const double> row);

struct RegressionScores {
  std::size_t n = 0;
  double rmse = 0.0;
  double mae = 0.0;
  double relative_error = 0.0;
};

RegressionScores score_regression(std::span<const double> actual, std::span<const double> predicted);

struct BranchScores {
  RegressionScores standalone;       // own regressor on rows with this true label
  RegressionScores routed;           // pipeline output on rows routed here
  RegressionScores correctly_routed; // routed here and true label agrees
};

struct BilevelEvaluation {
  RegressionScores combined;
  std::array<BranchScores, 2> branches{};  // index = label
  ClassificationReport classification;
  double misroute_rate = 0.0;
  std::vector<double> actual;
  std::vector<double> predicted;
  std::vector<int> routed_branch;
};

// Throws SchemaMismatch when the test schema differs from the model's.
BilevelEvaluation evaluate_bilevel(const BilevelModel& model, const EncodedDataset& test);
BilevelEvaluation evaluate_bilevel(const RegimeClassifier& classifier,
                                   const GbdtModel& short_regressor,
                                   const GbdtModel& long_regressor, const EncodedDataset& test);

}  // namespace duraflow
