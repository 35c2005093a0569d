#include "duraflow/forest.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "duraflow/error.hpp"
#include "duraflow/rng.hpp"

namespace duraflow {
namespace {

void validate(const ForestParams& p) {
  if (p.n_trees < 1) throw Error(ErrorCode::InvalidArgument, "forest n_trees must be >= 1");
  if (p.mtry < 1) throw Error(ErrorCode::InvalidArgument, "forest mtry must be >= 1");
  if (p.max_depth < 1) throw Error(ErrorCode::InvalidArgument, "forest max_depth must be >= 1");
  if (p.min_samples_leaf < 1.0) throw Error(ErrorCode::InvalidArgument, "forest min_samples_leaf must be >= 1");
}

}  // namespace

ForestModel train_forest(const EncodedDataset& train, const ForestParams& params, std::uint64_t seed,
                         int threads) {
  validate(params);
  const std::size_t n = train.rows();
  const std::size_t d = train.n_features();
  std::size_t positives = 0;
  for (int label : train.labels) positives += label == 1;
  if (n == 0 || positives == 0 || positives == n) {
    throw Error(ErrorCode::SingleClassTraining, "forest training needs both labels; got " +
                                                    std::to_string(positives) + " short of " +
                                                    std::to_string(n) + " rows");
  }

  ForestModel model;
  model.params = params;
  model.seed = seed;
  model.schema_fingerprint = train.schema.fingerprint();
  model.feature_names = train.schema.names();
  model.bin_map = build_bin_map(train.values, d, params.max_bins);
  const BinnedMatrix binned(model.bin_map, train.values, n);

  std::vector<double> labels(train.labels.begin(), train.labels.end());
  GrowParams grow;
  grow.max_depth = params.max_depth;
  grow.min_samples_leaf = params.min_samples_leaf;
  grow.impurity = Impurity::gini;
  grow.policy = GrowthPolicy::depth_wise;
  grow.features_per_split = std::min<int>(params.mtry, static_cast<int>(d));

  model.trees.resize(static_cast<std::size_t>(params.n_trees));
  auto train_one = [&](std::size_t t) {
    Rng rng(mix_seed(seed, t));
    std::vector<double> weight(n, 1.0);
    if (params.bootstrap) {
      std::fill(weight.begin(), weight.end(), 0.0);
      for (std::size_t k = 0; k < n; ++k) weight[rng.below(n)] += 1.0;
    }
    GrowTargets targets{labels, {}, weight};
    model.trees[t] = grow_tree(binned, targets, grow, &rng).tree;
  };

  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1,
                                                      model.trees.size());
  if (workers == 1) {
    for (std::size_t t = 0; t < model.trees.size(); ++t) train_one(t);
    return model;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < model.trees.size(); t = next++) {
          try {
            train_one(t);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return model;
}

ClassPrediction predict_forest(const ForestModel& model, std::span<const double> row) {
  if (row.size() != model.bin_map.n_features()) {
    throw Error(ErrorCode::SchemaMismatch, "row has " + std::to_string(row.size()) + " features, model expects " +
                                               std::to_string(model.bin_map.n_features()));
  }
  const auto binned = model.bin_map.bin_row(row);
  double short_share = 0.0;
  for (const auto& tree : model.trees) {
    const auto counts = tree.value(tree.find_leaf_binned(binned));
    const double total = counts[0] + counts[1];
    short_share += total > 0.0 ? counts[1] / total : 0.0;
  }
  ClassPrediction out;
  const double p_short = model.trees.empty() ? 0.0 : short_share / static_cast<double>(model.trees.size());
  out.proba = {1.0 - p_short, p_short};
  out.label = p_short > 0.5 ? 1 : 0;
  return out;
}

}  // namespace duraflow
