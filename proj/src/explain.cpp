#include "duraflow/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "duraflow/error.hpp"
#include "duraflow/rng.hpp"

namespace duraflow {
namespace {

struct PathElement {
  int feature = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double pweight = 0.0;
};

void extend_path(PathElement* path, int depth, double zero_fraction, double one_fraction, int feature) {
  path[depth] = {feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
  for (int i = depth - 1; i >= 0; --i) {
    path[i + 1].pweight += one_fraction * path[i].pweight * (i + 1) / static_cast<double>(depth + 1);
    path[i].pweight = zero_fraction * path[i].pweight * (depth - i) / static_cast<double>(depth + 1);
  }
}

void unwind_path(PathElement* path, int depth, int index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next = path[depth].pweight;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0.0) {
      const double tmp = path[i].pweight;
      path[i].pweight = next * (depth + 1) / ((i + 1) * one);
      next = tmp - path[i].pweight * zero * (depth - i) / static_cast<double>(depth + 1);
    } else {
      path[i].pweight = path[i].pweight * (depth + 1) / (zero * (depth - i));
    }
  }
  for (int i = index; i < depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

double unwound_sum(const PathElement* path, int depth, int index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next = path[depth].pweight;
  double total = 0.0;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0.0) {
      const double tmp = next * (depth + 1) / ((i + 1) * one);
      total += tmp;
      next = path[i].pweight - tmp * zero * ((depth - i) / static_cast<double>(depth + 1));
    } else {
      total += (path[i].pweight / zero) / ((depth - i) / static_cast<double>(depth + 1));
    }
  }
  return total;
}

struct ShapWalk {
  const Tree& tree;
  std::span<const std::uint8_t> row;
  std::span<const double> output;
  double scale;
  std::span<double> phi;

  void recurse(std::size_t node, int depth, PathElement* parent, double zero_fraction, double one_fraction,
               int feature) {
    PathElement* path = parent + depth;
    if (depth > 0) std::copy(parent, parent + depth, path);
    extend_path(path, depth, zero_fraction, one_fraction, feature);

    const TreeNode& n = tree.nodes[node];
    if (n.is_leaf()) {
      for (int i = 1; i <= depth; ++i) {
        const double w = unwound_sum(path, depth, i);
        const PathElement& el = path[i];
        phi[static_cast<std::size_t>(el.feature)] += scale * w * (el.one_fraction - el.zero_fraction) * output[node];
      }
      return;
    }
    const auto f = static_cast<std::size_t>(n.feature);
    const auto hot = static_cast<std::size_t>(row[f] <= n.bin_threshold ? n.left : n.right);
    const auto cold = static_cast<std::size_t>(hot == static_cast<std::size_t>(n.left) ? n.right : n.left);
    const double hot_zero = tree.nodes[hot].cover / n.cover;
    const double cold_zero = tree.nodes[cold].cover / n.cover;
    double incoming_zero = 1.0;
    double incoming_one = 1.0;

    int index = 0;
    for (; index <= depth; ++index) {
      if (path[index].feature == n.feature) break;
    }
    if (index != depth + 1) {
      incoming_zero = path[index].zero_fraction;
      incoming_one = path[index].one_fraction;
      unwind_path(path, depth, index);
      depth -= 1;
    }
    recurse(hot, depth + 1, path, hot_zero * incoming_zero, incoming_one, n.feature);
    recurse(cold, depth + 1, path, cold_zero * incoming_zero, 0.0, n.feature);
  }
};

void check_covers(const Tree& tree) {
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    if (!(tree.nodes[i].cover > 0.0)) {
      throw Error(ErrorCode::MissingCovers, "tree node " + std::to_string(i) + " has no positive cover");
    }
  }
}

void shap_binned(const Tree& tree, std::span<const std::uint8_t> row, std::span<const double> output,
                 double scale, std::span<double> phi) {
  if (tree.nodes.size() <= 1) return;
  check_covers(tree);
  const int d = tree.depth() + 2;
  std::vector<PathElement> buffer(static_cast<std::size_t>(d * (d + 1) / 2));
  ShapWalk walk{tree, row, output, scale, phi};
  walk.recurse(0, 0, buffer.data(), 1.0, 1.0, -1);
}

std::vector<double> regression_outputs(const Tree& tree) {
  return std::vector<double>(tree.values.begin(), tree.values.end());
}

std::vector<double> short_share_outputs(const Tree& tree) {
  std::vector<double> out(tree.nodes.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto counts = tree.value(i);
    const double total = counts[0] + counts[1];
    out[i] = total > 0.0 ? counts[1] / total : 0.0;
  }
  return out;
}

void check_width(std::size_t got, std::size_t expected) {
  if (got != expected) {
    throw Error(ErrorCode::SchemaMismatch, "row has " + std::to_string(got) + " features, model expects " +
                                               std::to_string(expected));
  }
}

// Per-tree scalar outputs, computed once per model.
struct Prepared {
  const BinMap* bins = nullptr;
  std::vector<const Tree*> trees;
  std::vector<std::vector<double>> outputs;
  double scale = 1.0;
  double base = 0.0;
  std::size_t n_features = 0;
};

Prepared prepare(const GbdtModel& model) {
  Prepared p;
  p.bins = &model.bin_map;
  p.scale = model.params.learning_rate;
  p.n_features = model.bin_map.n_features();
  double expected = 0.0;
  for (const auto& t : model.trees) {
    p.trees.push_back(&t);
    p.outputs.push_back(regression_outputs(t));
    expected += expected_tree_output(t, p.outputs.back());
  }
  p.base = model.base_score + p.scale * expected;
  return p;
}

Prepared prepare(const ForestModel& model) {
  Prepared p;
  p.bins = &model.bin_map;
  p.scale = model.trees.empty() ? 0.0 : 1.0 / static_cast<double>(model.trees.size());
  p.n_features = model.bin_map.n_features();
  double expected = 0.0;
  for (const auto& t : model.trees) {
    p.trees.push_back(&t);
    p.outputs.push_back(short_share_outputs(t));
    expected += expected_tree_output(t, p.outputs.back());
  }
  p.base = p.scale * expected;
  return p;
}

ShapVector explain_row(const Prepared& p, std::span<const double> row) {
  check_width(row.size(), p.n_features);
  ShapVector out;
  out.phi.assign(p.n_features, 0.0);
  out.base_value = p.base;
  const auto binned = p.bins->bin_row(row);
  for (std::size_t t = 0; t < p.trees.size(); ++t) shap_binned(*p.trees[t], binned, p.outputs[t], p.scale, out.phi);
  return out;
}

ShapSummary summarize(const Prepared& p, const std::vector<std::string>& names, const EncodedDataset& data,
                      std::size_t sample_cap, std::uint64_t seed, int threads) {
  if (data.rows() == 0) throw Error(ErrorCode::EmptyInput, "no rows to explain");
  check_width(data.n_features(), p.n_features);
  std::vector<std::size_t> rows(data.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  if (rows.size() > sample_cap) {
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(rows));
    rows.resize(sample_cap);
    std::sort(rows.begin(), rows.end());
  }

  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1,
                                                      std::max<std::size_t>(rows.size(), 1));
  // Per-row results summed in row order, so the means do not depend on `threads`.
  std::vector<double> abs_phi(rows.size() * p.n_features);
  auto work = [&](std::size_t w) {
    for (std::size_t k = rows.size() * w / workers; k < rows.size() * (w + 1) / workers; ++k) {
      const auto sv = explain_row(p, data.row(rows[k]));
      for (std::size_t j = 0; j < p.n_features; ++j) abs_phi[k * p.n_features + j] = std::abs(sv.phi[j]);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }

  ShapSummary s;
  s.features = names;
  s.rows_used = rows.size();
  s.mean_abs.assign(p.n_features, 0.0);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (std::size_t j = 0; j < p.n_features; ++j) s.mean_abs[j] += abs_phi[k * p.n_features + j];
  }
  for (double& v : s.mean_abs) v /= static_cast<double>(rows.size());
  s.ranking.resize(p.n_features);
  std::iota(s.ranking.begin(), s.ranking.end(), std::size_t{0});
  std::stable_sort(s.ranking.begin(), s.ranking.end(),
                   [&](std::size_t a, std::size_t b) { return s.mean_abs[a] > s.mean_abs[b]; });
  return s;
}

}  // namespace

double expected_tree_output(const Tree& tree, std::span<const double> node_output) {
  if (tree.nodes.size() == 1) return node_output[0];
  const double total = tree.nodes[0].cover;
  if (!(total > 0.0)) throw Error(ErrorCode::MissingCovers, "tree root has no positive cover");
  double sum = 0.0;
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    if (tree.nodes[i].is_leaf()) sum += tree.nodes[i].cover / total * node_output[i];
  }
  return sum;
}

void tree_shap(const Tree& tree, std::span<const double> row, const BinMap& bins,
               std::span<const double> node_output, double scale, std::span<double> phi) {
  check_width(row.size(), bins.n_features());
  check_width(phi.size(), bins.n_features());
  const auto binned = bins.bin_row(row);
  shap_binned(tree, binned, node_output, scale, phi);
}

ShapVector tree_shap(const GbdtModel& model, std::span<const double> row) { return explain_row(prepare(model), row); }

ShapVector tree_shap(const ForestModel& model, std::span<const double> row) {
  return explain_row(prepare(model), row);
}

ShapSummary shap_summary(const GbdtModel& model, const EncodedDataset& data, std::size_t sample_cap,
                         std::uint64_t seed, int threads) {
  return summarize(prepare(model), model.feature_names, data, sample_cap, seed, threads);
}

ShapSummary shap_summary(const ForestModel& model, const EncodedDataset& data, std::size_t sample_cap,
                         std::uint64_t seed, int threads) {
  return summarize(prepare(model), model.feature_names, data, sample_cap, seed, threads);
}

}  // namespace duraflow
