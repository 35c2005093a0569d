#include "duraflow/bilevel.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "duraflow/error.hpp"
#include "duraflow/hash.hpp"

namespace duraflow {
namespace {

std::string dataset_hash(const EncodedDataset& ds) {
  Fnv1a h;
  h.update(ds.schema.fingerprint());
  h.update(ds.values.data(), ds.values.size() * sizeof(double));
  h.update(ds.durations.data(), ds.durations.size() * sizeof(double));
  h.update(ds.labels.data(), ds.labels.size() * sizeof(int));
  return h.hex();
}

std::vector<std::size_t> rows_with_label(const EncodedDataset& ds, int label) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    if (ds.labels[i] == label) out.push_back(i);
  }
  return out;
}

void check_row(const FeatureSchema& schema, std::span<const double> row) {
  if (row.size() != schema.size()) {
    throw Error(ErrorCode::SchemaMismatch, "row has " + std::to_string(row.size()) + " features, model expects " +
                                               std::to_string(schema.size()));
  }
}

}  // namespace

RegimeClassifier forest_classifier(const ForestModel& model) {
  return [&model](std::span<const double> row) { return predict_forest(model, row); };
}

BilevelModel train_bilevel(const EncodedDataset& train, const PipelineConfig& config) {
  const auto short_rows = rows_with_label(train, 1);
  const auto long_rows = rows_with_label(train, 0);
  if (short_rows.empty() || long_rows.empty()) {
    throw Error(ErrorCode::SingleClassTraining, "training split has " + std::to_string(short_rows.size()) +
                                                    " short and " + std::to_string(long_rows.size()) + " long rows");
  }
  if (short_rows.size() < 2) throw Error(ErrorCode::EmptyBranch, "short branch has fewer than 2 training rows");
  if (long_rows.size() < 2) throw Error(ErrorCode::EmptyBranch, "long branch has fewer than 2 training rows");

  BilevelModel model;
  model.schema = train.schema;
  const EncodedDataset short_set = train.subset(short_rows);
  const EncodedDataset long_set = train.subset(long_rows);

  if (config.threads > 1) {
    // Branch regressors are independent of the forest; run them alongside it.
    std::exception_ptr short_error, long_error;
    {
      std::jthread short_worker([&] {
        try {
          model.short_regressor = train_gbdt(short_set, config.short_branch, config.short_seed);
        } catch (...) {
          short_error = std::current_exception();
        }
      });
      std::jthread long_worker([&] {
        try {
          model.long_regressor = train_gbdt(long_set, config.long_branch, config.long_seed);
        } catch (...) {
          long_error = std::current_exception();
        }
      });
      model.classifier = train_forest(train, config.forest, config.forest_seed, std::max(1, config.threads - 2));
    }
    if (short_error) std::rethrow_exception(short_error);
    if (long_error) std::rethrow_exception(long_error);
  } else {
    model.classifier = train_forest(train, config.forest, config.forest_seed, 1);
    model.short_regressor = train_gbdt(short_set, config.short_branch, config.short_seed);
    model.long_regressor = train_gbdt(long_set, config.long_branch, config.long_seed);
  }

  auto& p = model.provenance;
  p.forest_seed = config.forest_seed;
  p.short_seed = config.short_seed;
  p.long_seed = config.long_seed;
  p.data_hash = dataset_hash(train);
  p.train_rows = train.rows();
  p.short_rows = short_rows.size();
  p.long_rows = long_rows.size();
  return model;
}

BilevelPrediction predict_bilevel(const RegimeClassifier& classifier, const GbdtModel& short_regressor,
                                  const GbdtModel& long_regressor, std::span<const double> row) {
  const ClassPrediction cls = classifier(row);
  BilevelPrediction out;
  out.branch = cls.label;
  out.proba = cls.proba;
  out.minutes = cls.label == 1 ? predict_gbdt(short_regressor, row) : predict_gbdt(long_regressor, row);
  return out;
}

BilevelPrediction predict_bilevel(const BilevelModel& model, std::span<const double> row) {
  check_row(model.schema, row);
  return predict_bilevel(forest_classifier(model.classifier), model.short_regressor, model.long_regressor, row);
}

RegressionScores score_regression(std::span<const double> actual, std::span<const double> predicted) {
  RegressionScores s;
  s.n = actual.size();
  if (actual.empty()) return s;
  s.rmse = rmse(actual, predicted);
  s.mae = mae(actual, predicted);
  bool positive = true;
  for (double a : actual) positive = positive && a != 0.0;
  s.relative_error = positive ? relative_error(actual, predicted) : std::numeric_limits<double>::quiet_NaN();
  return s;
}

BilevelEvaluation evaluate_bilevel(const RegimeClassifier& classifier, const GbdtModel& short_regressor,
                                   const GbdtModel& long_regressor, const EncodedDataset& test) {
  if (test.rows() == 0) throw Error(ErrorCode::EmptyInput, "test split is empty");
  BilevelEvaluation ev;
  const std::size_t n = test.rows();
  ev.actual = test.durations;
  ev.predicted.resize(n);
  ev.routed_branch.resize(n);

  std::array<std::vector<double>, 2> own_actual, own_pred, routed_actual, routed_pred, good_actual, good_pred;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = test.row(i);
    const auto pred = predict_bilevel(classifier, short_regressor, long_regressor, row);
    ev.predicted[i] = pred.minutes;
    ev.routed_branch[i] = pred.branch;

    const int truth = test.labels[i];
    const auto t = static_cast<std::size_t>(truth);
    const auto b = static_cast<std::size_t>(pred.branch);
    own_actual[t].push_back(ev.actual[i]);
    own_pred[t].push_back(pred.branch == truth ? pred.minutes
                                                : predict_gbdt(truth == 1 ? short_regressor : long_regressor, row));
    routed_actual[b].push_back(ev.actual[i]);
    routed_pred[b].push_back(pred.minutes);
    if (pred.branch == truth) {
      good_actual[b].push_back(ev.actual[i]);
      good_pred[b].push_back(pred.minutes);
    }
  }

  ev.combined = score_regression(ev.actual, ev.predicted);
  for (std::size_t b = 0; b < 2; ++b) {
    ev.branches[b].standalone = score_regression(own_actual[b], own_pred[b]);
    ev.branches[b].routed = score_regression(routed_actual[b], routed_pred[b]);
    ev.branches[b].correctly_routed = score_regression(good_actual[b], good_pred[b]);
  }
  ev.classification = classification_report(test.labels, ev.routed_branch);
  std::size_t misrouted = 0;
  for (std::size_t i = 0; i < n; ++i) misrouted += ev.routed_branch[i] != test.labels[i];
  ev.misroute_rate = static_cast<double>(misrouted) / static_cast<double>(n);
  return ev;
}

BilevelEvaluation evaluate_bilevel(const BilevelModel& model, const EncodedDataset& test) {
  if (test.schema.fingerprint() != model.schema.fingerprint()) {
    throw Error(ErrorCode::SchemaMismatch, "test data schema " + test.schema.fingerprint() +
                                               " differs from model schema " + model.schema.fingerprint());
  }
  return evaluate_bilevel(forest_classifier(model.classifier), model.short_regressor, model.long_regressor, test);
}

}  // namespace duraflow
