#include "duraflow/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "duraflow/error.hpp"
#include "duraflow/rng.hpp"

namespace duraflow {
namespace {

void validate(const GbdtParams& p) {
  if (p.n_rounds < 0) throw Error(ErrorCode::InvalidArgument, "gbdt n_rounds must be >= 0");
  if (!(p.learning_rate > 0.0 && p.learning_rate <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "gbdt learning_rate must be in (0, 1]");
  }
  if (p.early_stopping_rounds < 0) throw Error(ErrorCode::InvalidArgument, "gbdt early_stopping_rounds must be >= 0");
  if (p.early_stopping_rounds > 0 && !(p.validation_fraction > 0.0 && p.validation_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "gbdt validation_fraction must be in (0, 1)");
  }
}

double mean_squared(std::span<const double> pred, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = pred[i] - y[i];
    s += e * e;
  }
  return s / static_cast<double>(y.size());
}

}  // namespace

GbdtModel train_gbdt(const EncodedDataset& train, const GbdtParams& params, std::uint64_t seed,
                     GbdtTrace* trace) {
  validate(params);
  const std::size_t n = train.rows();
  const std::size_t d = train.n_features();
  if (n < 2) throw Error(ErrorCode::TooFewRows, "gbdt training needs at least 2 rows, got " + std::to_string(n));

  GrowParams grow;
  grow.max_depth = params.max_depth;
  grow.max_leaves = params.max_leaves;
  grow.min_samples_leaf = params.min_samples_leaf;
  grow.min_gain = params.min_gain;
  grow.lambda_l2 = params.lambda_l2;
  grow.impurity = Impurity::sq_loss;
  grow.policy = GrowthPolicy::leaf_wise;
  validate(grow);

  // Held-out carve-out for early stopping, drawn from the training rows only.
  std::vector<std::size_t> fit_rows(n);
  std::iota(fit_rows.begin(), fit_rows.end(), std::size_t{0});
  std::vector<std::size_t> valid_rows;
  if (params.early_stopping_rounds > 0) {
    const auto n_valid = static_cast<std::size_t>(std::llround(params.validation_fraction * static_cast<double>(n)));
    if (n_valid >= 1 && n - n_valid >= 2) {
      Rng rng(mix_seed(seed, 0x9bd7));
      rng.shuffle(std::span<std::size_t>(fit_rows));
      valid_rows.assign(fit_rows.end() - static_cast<std::ptrdiff_t>(n_valid), fit_rows.end());
      fit_rows.resize(n - n_valid);
      std::sort(fit_rows.begin(), fit_rows.end());
      std::sort(valid_rows.begin(), valid_rows.end());
    }
  }
  const EncodedDataset fit = fit_rows.size() == n ? train : train.subset(fit_rows);
  const std::size_t m = fit.rows();

  GbdtModel model;
  model.params = params;
  model.seed = seed;
  model.schema_fingerprint = train.schema.fingerprint();
  model.feature_names = train.schema.names();
  model.base_score = std::accumulate(fit.durations.begin(), fit.durations.end(), 0.0) / static_cast<double>(m);
  model.bin_map = build_bin_map(fit.values, d, params.max_bins);
  const BinnedMatrix binned(model.bin_map, fit.values, m);

  std::vector<std::vector<std::uint8_t>> valid_bins;
  std::vector<double> valid_y;
  for (std::size_t r : valid_rows) {
    valid_bins.push_back(model.bin_map.bin_row(train.row(r)));
    valid_y.push_back(train.durations[r]);
  }

  std::vector<double> pred(m, model.base_score);
  std::vector<double> valid_pred(valid_rows.size(), model.base_score);
  std::vector<double> grad(m);
  const std::vector<double> hess(m, 1.0);
  const double lr = params.learning_rate;

  GbdtTrace local;
  GbdtTrace& tr = trace ? *trace : local;
  tr = GbdtTrace{};
  tr.train_mse.push_back(mean_squared(pred, fit.durations));
  double best_rmse = 0.0;
  if (!valid_rows.empty()) {
    best_rmse = std::sqrt(mean_squared(valid_pred, valid_y));
    tr.valid_rmse.push_back(best_rmse);
  }
  std::size_t best_rounds = 0;

  for (int round = 0; round < params.n_rounds; ++round) {
    for (std::size_t i = 0; i < m; ++i) grad[i] = pred[i] - fit.durations[i];
    GrowResult grown = grow_tree(binned, GrowTargets{grad, hess, {}}, grow);
    for (std::size_t i = 0; i < m; ++i) {
      pred[i] += lr * grown.tree.value(static_cast<std::size_t>(grown.leaf_of_row[i]))[0];
    }
    for (std::size_t i = 0; i < valid_rows.size(); ++i) {
      valid_pred[i] += lr * grown.tree.value(grown.tree.find_leaf_binned(valid_bins[i]))[0];
    }
    const bool stalled = grown.tree.nodes.size() == 1 && std::abs(grown.tree.values[0]) == 0.0;
    model.trees.push_back(std::move(grown.tree));
    tr.train_mse.push_back(mean_squared(pred, fit.durations));

    if (valid_rows.empty()) {
      best_rounds = model.trees.size();
    } else {
      const double rmse = std::sqrt(mean_squared(valid_pred, valid_y));
      tr.valid_rmse.push_back(rmse);
      if (rmse < best_rmse) {
        best_rmse = rmse;
        best_rounds = model.trees.size();
      } else if (model.trees.size() - best_rounds >= static_cast<std::size_t>(params.early_stopping_rounds)) {
        break;
      }
    }
    if (stalled) break;
  }
  model.trees.resize(best_rounds);
  tr.best_rounds = best_rounds;
  return model;
}

double predict_gbdt_raw(const GbdtModel& model, std::span<const double> row) {
  if (row.size() != model.bin_map.n_features()) {
    throw Error(ErrorCode::SchemaMismatch, "row has " + std::to_string(row.size()) + " features, model expects " +
                                               std::to_string(model.bin_map.n_features()));
  }
  const auto binned = model.bin_map.bin_row(row);
  double sum = 0.0;
  for (const auto& tree : model.trees) sum += tree.value(tree.find_leaf_binned(binned))[0];
  return model.base_score + model.params.learning_rate * sum;
}

double predict_gbdt(const GbdtModel& model, std::span<const double> row) {
  return std::max(0.0, predict_gbdt_raw(model, row));
}

}  // namespace duraflow
