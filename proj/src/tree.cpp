#include "duraflow/tree.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <sstream>

#include "duraflow/csv.hpp"
#include "duraflow/error.hpp"
#include "duraflow/quantile.hpp"

namespace duraflow {

std::vector<double> build_bins(std::span<const double> values, int max_bins) {
  if (max_bins < 2 || max_bins > 256) throw Error(ErrorCode::InvalidArgument, "max_bins must lie in [2, 256]");
  std::vector<double> distinct(values.begin(), values.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<double> edges;
  if (distinct.size() <= 1) return edges;
  if (distinct.size() <= static_cast<std::size_t>(max_bins)) {
    edges.reserve(distinct.size() - 1);
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
      const double lo = distinct[i];
      const double hi = distinct[i + 1];
      const double mid = lo + (hi - lo) / 2.0;
      edges.push_back(mid < hi ? mid : lo);
    }
    return edges;
  }
  for (int k = 1; k < max_bins; ++k) {
    const double e = quantile_sorted(distinct, static_cast<double>(k) / max_bins);
    if (edges.empty() || e > edges.back()) edges.push_back(e);
  }
  return edges;
}

std::uint8_t BinMap::bin(std::size_t feature, double value) const {
  const auto& e = edges[feature];
  return static_cast<std::uint8_t>(std::lower_bound(e.begin(), e.end(), value) - e.begin());
}

std::vector<std::uint8_t> BinMap::bin_row(std::span<const double> row) const {
  std::vector<std::uint8_t> out(edges.size());
  for (std::size_t f = 0; f < edges.size(); ++f) out[f] = bin(f, row[f]);
  return out;
}

BinMap build_bin_map(std::span<const double> values, std::size_t n_features, int max_bins) {
  BinMap map;
  if (n_features == 0) return map;
  const std::size_t n = values.size() / n_features;
  std::vector<double> column(n);
  for (std::size_t f = 0; f < n_features; ++f) {
    for (std::size_t i = 0; i < n; ++i) column[i] = values[i * n_features + f];
    map.edges.push_back(build_bins(column, max_bins));
  }
  return map;
}

BinnedMatrix::BinnedMatrix(const BinMap& map, std::span<const double> values, std::size_t n_rows)
    : rows_(n_rows) {
  const std::size_t d = map.n_features();
  if (values.size() != n_rows * d) throw Error(ErrorCode::SchemaMismatch, "value matrix does not match bin map width");
  n_bins_.resize(d);
  bins_.resize(n_rows * d);
  for (std::size_t f = 0; f < d; ++f) {
    n_bins_[f] = map.n_bins(f);
    std::uint8_t* out = bins_.data() + f * n_rows;
    for (std::size_t i = 0; i < n_rows; ++i) out[i] = map.bin(f, values[i * d + f]);
  }
}

BinnedMatrix BinnedMatrix::from_columns(std::vector<std::vector<std::uint8_t>> columns,
                                        std::vector<std::size_t> n_bins) {
  BinnedMatrix m;
  m.rows_ = columns.empty() ? 0 : columns.front().size();
  m.n_bins_ = std::move(n_bins);
  for (auto& c : columns) {
    if (c.size() != m.rows_) throw Error(ErrorCode::InvalidArgument, "ragged bin columns");
    m.bins_.insert(m.bins_.end(), c.begin(), c.end());
  }
  return m;
}

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

int Tree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> d(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

std::size_t Tree::find_leaf(std::span<const double> row, const BinMap& bins) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    const auto f = static_cast<std::size_t>(n.feature);
    i = static_cast<std::size_t>(bins.bin(f, row[f]) <= n.bin_threshold ? n.left : n.right);
  }
  return i;
}

std::size_t Tree::find_leaf(const BinnedMatrix& bins, std::size_t row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(bins.at(row, static_cast<std::size_t>(n.feature)) <= n.bin_threshold ? n.left
                                                                                                       : n.right);
  }
  return i;
}

std::size_t Tree::find_leaf_binned(std::span<const std::uint8_t> binned_row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(binned_row[static_cast<std::size_t>(n.feature)] <= n.bin_threshold ? n.left
                                                                                                    : n.right);
  }
  return i;
}

std::span<const double> predict_tree(const Tree& tree, std::span<const double> row, const BinMap& bins) {
  return tree.value(tree.find_leaf(row, bins));
}

void validate(const GrowParams& params) {
  if (params.min_samples_leaf < 1.0) throw Error(ErrorCode::InvalidArgument, "min_samples_leaf must be >= 1");
  if (params.max_leaves != 0 && params.max_leaves < 2) {
    throw Error(ErrorCode::InvalidArgument, "max_leaves must be >= 2 or 0 (unlimited)");
  }
  if (params.min_gain < 0.0) throw Error(ErrorCode::InvalidArgument, "min_gain must be >= 0");
  if (params.lambda_l2 < 0.0) throw Error(ErrorCode::InvalidArgument, "lambda_l2 must be >= 0");
  if (params.features_per_split < 0) throw Error(ErrorCode::InvalidArgument, "features_per_split must be >= 0");
}

double gini_impurity(double class1, double total) {
  if (total <= 0.0) return 0.0;
  const double p1 = class1 / total;
  const double p0 = 1.0 - p1;
  return 1.0 - p1 * p1 - p0 * p0;
}

namespace {

double leaf_score(double g, double h, double lambda) {
  const double denom = h + lambda;
  return denom > 0.0 ? g * g / denom : 0.0;
}

}  // namespace

std::optional<SplitCandidate> best_split(const NodeHistogram& histogram,
                                         std::span<const std::size_t> features,
                                         const GrowParams& params) {
  std::optional<SplitCandidate> best;
  for (std::size_t f : features) {
    const auto& bins = histogram[f];
    if (bins.size() < 2) continue;
    HistBin total;
    for (const auto& b : bins) {
      total.g += b.g;
      total.h += b.h;
      total.n += b.n;
    }
    if (total.n < 2.0 * params.min_samples_leaf) return std::nullopt;

    const double parent = params.impurity == Impurity::gini
                              ? gini_impurity(total.g, total.n)
                              : leaf_score(total.g, total.h, params.lambda_l2);
    HistBin left;
    for (std::size_t t = 0; t + 1 < bins.size(); ++t) {
      left.g += bins[t].g;
      left.h += bins[t].h;
      left.n += bins[t].n;
      const double right_n = total.n - left.n;
      if (left.n < params.min_samples_leaf) continue;
      if (right_n < params.min_samples_leaf) break;
      double gain;
      if (params.impurity == Impurity::gini) {
        const double right_g = total.g - left.g;
        gain = parent - (left.n / total.n) * gini_impurity(left.g, left.n) -
               (right_n / total.n) * gini_impurity(right_g, right_n);
      } else {
        gain = leaf_score(left.g, left.h, params.lambda_l2) +
               leaf_score(total.g - left.g, total.h - left.h, params.lambda_l2) - parent;
      }
      // Numerical ties keep the earlier (feature, bin).
      if (!best || gain > best->gain + 1e-12 * std::max(1.0, std::abs(best->gain))) {
        best = SplitCandidate{f, static_cast<std::uint32_t>(t), gain};
      }
    }
  }
  if (!best || best->gain < params.min_gain) return std::nullopt;
  return best;
}

namespace {

struct Frontier {
  std::int32_t node = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  int depth = 0;
  std::uint64_t order = 0;
  std::optional<SplitCandidate> split;
  NodeHistogram hist;  // retained only when children may reuse it
};

class Grower {
 public:
  Grower(const BinnedMatrix& bins, const GrowTargets& targets, const GrowParams& params, Rng* rng)
      : bins_(bins), params_(params), rng_(rng) {
    validate(params);
    const std::size_t n = bins.rows();
    if (targets.grad.size() != n || (params.impurity == Impurity::sq_loss && targets.hess.size() != n) ||
        (!targets.weight.empty() && targets.weight.size() != n)) {
      throw Error(ErrorCode::InvalidArgument, "grow targets are not aligned with the bin matrix");
    }
    wg_.resize(n);
    wh_.resize(n);
    w_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = targets.weight.empty() ? 1.0 : targets.weight[i];
      w_[i] = w;
      wg_[i] = w * targets.grad[i];
      wh_[i] = params.impurity == Impurity::gini ? w : w * targets.hess[i];
      if (w > 0.0) rows_.push_back(static_cast<std::uint32_t>(i));
    }
    all_features_.resize(bins.cols());
    for (std::size_t f = 0; f < bins.cols(); ++f) all_features_[f] = f;
    sample_features_ = params.features_per_split > 0 &&
                       static_cast<std::size_t>(params.features_per_split) < bins.cols();
    if (sample_features_ && rng_ == nullptr) {
      throw Error(ErrorCode::InvalidArgument, "feature sampling requires a random generator");
    }
    reuse_hist_ = params.policy == GrowthPolicy::leaf_wise && !sample_features_;
  }

  GrowResult run() {
    GrowResult result;
    tree_.value_dim = params_.impurity == Impurity::gini ? 2 : 1;

    Frontier root;
    root.node = add_node(0, rows_.size());
    root.end = rows_.size();
    evaluate(root, nullptr);

    auto cmp = [](const Frontier* a, const Frontier* b) {
      if (a->split->gain != b->split->gain) return a->split->gain < b->split->gain;
      return a->order > b->order;
    };
    std::priority_queue<Frontier*, std::vector<Frontier*>, decltype(cmp)> heap(cmp);
    std::deque<Frontier*> fifo;
    std::deque<Frontier> storage;
    std::vector<Frontier*> leaves;

    auto push = [&](Frontier&& f) {
      storage.push_back(std::move(f));
      Frontier* p = &storage.back();
      if (!p->split) {
        leaves.push_back(p);
        return;
      }
      if (params_.policy == GrowthPolicy::leaf_wise) {
        heap.push(p);
      } else {
        fifo.push_back(p);
      }
    };
    push(std::move(root));

    std::size_t leaf_count = 1;
    while (!(heap.empty() && fifo.empty())) {
      Frontier* cur;
      if (params_.policy == GrowthPolicy::leaf_wise) {
        cur = heap.top();
        heap.pop();
      } else {
        cur = fifo.front();
        fifo.pop_front();
      }
      if (params_.max_leaves != 0 && leaf_count >= static_cast<std::size_t>(params_.max_leaves)) {
        leaves.push_back(cur);
        continue;
      }
      auto [left, right] = split(*cur);
      cur->hist.clear();
      cur->hist.shrink_to_fit();
      ++leaf_count;
      push(std::move(left));
      push(std::move(right));
    }

    result.leaf_of_row.assign(bins_.rows(), -1);
    for (const Frontier* f : leaves) {
      for (std::size_t k = f->begin; k < f->end; ++k) result.leaf_of_row[rows_[k]] = f->node;
    }
    result.tree = std::move(tree_);
    return result;
  }

 private:
  std::int32_t add_node(std::size_t begin, std::size_t end) {
    double g = 0.0, h = 0.0, n = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      const auto r = rows_[k];
      g += wg_[r];
      h += wh_[r];
      n += w_[r];
    }
    TreeNode node;
    node.cover = n;
    tree_.nodes.push_back(node);
    if (params_.impurity == Impurity::gini) {
      tree_.values.push_back(n - g);
      tree_.values.push_back(g);
    } else {
      const double denom = h + params_.lambda_l2;
      tree_.values.push_back(denom > 0.0 ? -g / denom : 0.0);
    }
    return static_cast<std::int32_t>(tree_.nodes.size() - 1);
  }

  std::vector<std::size_t> choose_features() {
    if (!sample_features_) return all_features_;
    std::vector<std::size_t> pool = all_features_;
    const auto k = static_cast<std::size_t>(params_.features_per_split);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng_->below(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  void build_histogram(const Frontier& f, std::span<const std::size_t> features, NodeHistogram& hist) const {
    hist.assign(bins_.cols(), {});
    for (std::size_t feat : features) {
      auto& h = hist[feat];
      h.assign(bins_.n_bins(feat), HistBin{});
      const auto column = bins_.column(feat);
      for (std::size_t k = f.begin; k < f.end; ++k) {
        const auto r = rows_[k];
        auto& b = h[column[r]];
        b.g += wg_[r];
        b.h += wh_[r];
        b.n += w_[r];
      }
    }
  }

  // sibling histogram = parent - built
  static void subtract(const NodeHistogram& parent, const NodeHistogram& built, NodeHistogram& out) {
    out.assign(parent.size(), {});
    for (std::size_t f = 0; f < parent.size(); ++f) {
      out[f].resize(parent[f].size());
      for (std::size_t b = 0; b < parent[f].size(); ++b) {
        out[f][b].g = parent[f][b].g - built[f][b].g;
        out[f][b].h = parent[f][b].h - built[f][b].h;
        out[f][b].n = parent[f][b].n - built[f][b].n;
      }
    }
  }

  // Finds the node's best split. `ready` is a precomputed full histogram.
  void evaluate(Frontier& f, NodeHistogram* ready) {
    f.order = next_order_++;
    const double cover = tree_.nodes[static_cast<std::size_t>(f.node)].cover;
    const bool depth_ok = params_.max_depth < 0 || f.depth < params_.max_depth;
    if (!depth_ok || cover < 2.0 * params_.min_samples_leaf || f.end - f.begin < 2) {
      return;
    }
    std::vector<std::size_t> features = choose_features();
    NodeHistogram local;
    NodeHistogram& hist = ready ? *ready : local;
    if (!ready) build_histogram(f, features, hist);
    f.split = best_split(hist, features, params_);
    if (f.split && reuse_hist_) f.hist = std::move(hist);
  }

  std::pair<Frontier, Frontier> split(Frontier& parent) {
    const SplitCandidate s = *parent.split;
    const auto column = bins_.column(s.feature);
    // stable partition of the row range
    scratch_.clear();
    std::size_t write = parent.begin;
    for (std::size_t k = parent.begin; k < parent.end; ++k) {
      const auto r = rows_[k];
      if (column[r] <= s.threshold) {
        rows_[write++] = r;
      } else {
        scratch_.push_back(r);
      }
    }
    std::copy(scratch_.begin(), scratch_.end(), rows_.begin() + static_cast<std::ptrdiff_t>(write));

    Frontier left, right;
    left.begin = parent.begin;
    left.end = write;
    right.begin = write;
    right.end = parent.end;
    left.depth = right.depth = parent.depth + 1;
    left.node = add_node(left.begin, left.end);
    right.node = add_node(right.begin, right.end);

    auto& pn = tree_.nodes[static_cast<std::size_t>(parent.node)];
    pn.feature = static_cast<std::int32_t>(s.feature);
    pn.bin_threshold = s.threshold;
    pn.left = left.node;
    pn.right = right.node;

    if (reuse_hist_ && !parent.hist.empty()) {
      Frontier& small = (left.end - left.begin) <= (right.end - right.begin) ? left : right;
      NodeHistogram small_hist, large_hist;
      build_histogram(small, all_features_, small_hist);
      subtract(parent.hist, small_hist, large_hist);
      evaluate(left, &small == &left ? &small_hist : &large_hist);
      evaluate(right, &small == &right ? &small_hist : &large_hist);
    } else {
      evaluate(left, nullptr);
      evaluate(right, nullptr);
    }
    return {std::move(left), std::move(right)};
  }

  const BinnedMatrix& bins_;
  const GrowParams& params_;
  Rng* rng_;
  Tree tree_;
  std::vector<double> wg_, wh_, w_;
  std::vector<std::uint32_t> rows_;
  std::vector<std::uint32_t> scratch_;
  std::vector<std::size_t> all_features_;
  bool sample_features_ = false;
  bool reuse_hist_ = false;
  std::uint64_t next_order_ = 0;
};

}  // namespace

GrowResult grow_tree(const BinnedMatrix& bins, const GrowTargets& targets, const GrowParams& params, Rng* rng) {
  return Grower(bins, targets, params, rng).run();
}

std::string to_dot(const Tree& tree, const BinMap& bins, std::span<const std::string> feature_names,
                   int max_depth) {
  std::ostringstream out;
  out << "digraph Tree {\n";
  out << "node [shape=box, fontname=\"helvetica\"];\n";
  std::vector<int> depth(tree.nodes.size(), 0);
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    if (!n.is_leaf()) {
      depth[static_cast<std::size_t>(n.left)] = depth[i] + 1;
      depth[static_cast<std::size_t>(n.right)] = depth[i] + 1;
    }
    if (max_depth >= 0 && depth[i] > max_depth) continue;
    std::string label;
    if (n.is_leaf() || (max_depth >= 0 && depth[i] == max_depth)) {
      const auto v = tree.value(i);
      if (tree.value_dim == 1) {
        label = "value = " + csv::format_double(v[0]);
      } else {
        label = "counts = [";
        for (std::size_t k = 0; k < v.size(); ++k) label += (k ? ", " : "") + csv::format_double(v[k]);
        label += "]";
      }
      if (!n.is_leaf()) label += "\\n(truncated)";
    } else {
      const auto f = static_cast<std::size_t>(n.feature);
      const std::string name = f < feature_names.size() ? feature_names[f] : "f" + std::to_string(f);
      const double edge = n.bin_threshold < bins.edges[f].size() ? bins.edges[f][n.bin_threshold]
                                                                  : bins.edges[f].back();
      label = name + " <= " + csv::format_double(edge);
    }
    label += "\\ncover = " + csv::format_double(n.cover);
    std::string escaped;
    for (char c : label) {
      if (c == '"') escaped += '\\';
      escaped += c;
    }
    out << i << " [label=\"" << escaped << "\"];\n";
    if (!n.is_leaf() && (max_depth < 0 || depth[i] < max_depth)) {
      out << i << " -> " << n.left << " [label=\"yes\"];\n";
      out << i << " -> " << n.right << " [label=\"no\"];\n";
    }
  }
  out << "}\n";
  return out.str();
}

}  // namespace duraflow
