#pragma once

// Independent reference implementations used only by the tests. They work from
// raw rows and first principles, never from the library's histograms or paths.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "duraflow/rng.hpp"
#include "duraflow/tree.hpp"

namespace oracle {

// Position 1+(n-1)q on the sorted sample, interpolated by hand.
inline double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);  // zero-based
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

struct Problem {
  std::size_t n_features = 0;
  std::vector<std::size_t> n_bins;            // per feature
  std::vector<std::vector<std::uint8_t>> bin; // [row][feature]
  std::vector<double> target;                 // label (gini) or gradient (sq_loss)
  std::vector<double> weight;
};

struct Split {
  std::size_t feature = 0;
  std::uint32_t threshold = 0;
  double gain = 0.0;
};

inline double gini(double ones, double total) {
  if (total <= 0) return 0.0;
  const double p = ones / total;
  return 2.0 * p * (1.0 - p);
}

// Every (feature, threshold) pair, children summed straight from the rows.
// Squared-loss rows have hessian 1 times their weight.
inline std::optional<Split> brute_force_split(const Problem& p, bool use_gini, double min_leaf, double lambda,
                                              double min_gain) {
  double W = 0, G = 0;
  for (std::size_t r = 0; r < p.target.size(); ++r) {
    W += p.weight[r];
    G += p.weight[r] * p.target[r];
  }
  if (W < 2 * min_leaf) return std::nullopt;
  std::vector<Split> all;
  for (std::size_t f = 0; f < p.n_features; ++f) {
    for (std::uint32_t t = 0; t + 1 < p.n_bins[f]; ++t) {
      double wl = 0, gl = 0;
      for (std::size_t r = 0; r < p.target.size(); ++r) {
        if (p.bin[r][f] <= t) {
          wl += p.weight[r];
          gl += p.weight[r] * p.target[r];
        }
      }
      const double wr = W - wl, gr = G - gl;
      if (wl < min_leaf || wr < min_leaf) continue;
      double gain;
      if (use_gini) {
        gain = gini(G, W) - wl / W * gini(gl, wl) - wr / W * gini(gr, wr);
      } else {
        auto score = [&](double g, double h) { return h + lambda > 0 ? g * g / (h + lambda) : 0.0; };
        gain = score(gl, wl) + score(gr, wr) - score(G, W);
      }
      all.push_back({f, t, gain});
    }
  }
  if (all.empty()) return std::nullopt;
  double best = all.front().gain;
  for (const auto& s : all) best = std::max(best, s.gain);
  if (best < min_gain) return std::nullopt;
  for (const auto& s : all) {
    if (s.gain >= best - 1e-9 * std::max(1.0, std::abs(best))) return s;
  }
  return std::nullopt;
}

// Up to 100 rows over up to 5 features; weights 0..2 so some rows drop out.
inline Problem random_problem(duraflow::Rng& rng, bool gini_labels) {
  Problem p;
  p.n_features = 1 + rng.below(5);
  for (std::size_t f = 0; f < p.n_features; ++f) p.n_bins.push_back(1 + rng.below(10));
  const std::size_t n = 1 + rng.below(100);
  for (std::size_t r = 0; r < n; ++r) {
    std::vector<std::uint8_t> row;
    for (std::size_t f = 0; f < p.n_features; ++f) row.push_back(static_cast<std::uint8_t>(rng.below(p.n_bins[f])));
    p.bin.push_back(row);
    p.target.push_back(gini_labels ? static_cast<double>(rng.below(2)) : std::round(rng.normal() * 10) / 2);
    p.weight.push_back(static_cast<double>(rng.below(3)));
  }
  return p;
}

// The library's histogram input for a problem (hessian = weight).
inline duraflow::NodeHistogram histogram_of(const Problem& p) {
  duraflow::NodeHistogram h(p.n_features);
  for (std::size_t f = 0; f < p.n_features; ++f) {
    h[f].resize(p.n_bins[f]);
    for (std::size_t r = 0; r < p.target.size(); ++r) {
      auto& b = h[f][p.bin[r][f]];
      b.g += p.weight[r] * p.target[r];
      b.h += p.weight[r];
      b.n += p.weight[r];
    }
  }
  return h;
}

// Recursive root-to-leaf walk on raw values through the stored edges.
inline std::size_t walk(const duraflow::Tree& tree, const duraflow::BinMap& bins, const std::vector<double>& row,
                        std::size_t node = 0) {
  const auto& n = tree.nodes[node];
  if (n.feature < 0) return node;
  const auto f = static_cast<std::size_t>(n.feature);
  std::size_t bin = 0;
  for (double e : bins.edges[f]) bin += e < row[f];
  return walk(tree, bins, row, static_cast<std::size_t>(bin <= n.bin_threshold ? n.left : n.right));
}

// Expected output when only the features in `mask` are known: known features
// follow the row, unknown ones average the children by cover.
inline double conditional_expectation(const duraflow::Tree& tree, const std::vector<std::uint8_t>& row_bins,
                                      const std::vector<double>& leaf_value, unsigned mask, std::size_t node = 0) {
  const auto& n = tree.nodes[node];
  if (n.feature < 0) return leaf_value[node];
  const auto l = static_cast<std::size_t>(n.left), r = static_cast<std::size_t>(n.right);
  if (mask & (1u << n.feature)) {
    return conditional_expectation(tree, row_bins, leaf_value, mask,
                                   row_bins[static_cast<std::size_t>(n.feature)] <= n.bin_threshold ? l : r);
  }
  return (tree.nodes[l].cover * conditional_expectation(tree, row_bins, leaf_value, mask, l) +
          tree.nodes[r].cover * conditional_expectation(tree, row_bins, leaf_value, mask, r)) /
         n.cover;
}

// Shapley values by summing over every subset of the other features.
inline std::vector<double> exhaustive_shapley(const duraflow::Tree& tree, const std::vector<std::uint8_t>& row_bins,
                                              const std::vector<double>& leaf_value, std::size_t m) {
  std::vector<double> fact(m + 1, 1.0);
  for (std::size_t k = 1; k <= m; ++k) fact[k] = fact[k - 1] * static_cast<double>(k);
  std::vector<double> phi(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (unsigned s = 0; s < (1u << m); ++s) {
      if (s & (1u << i)) continue;
      const auto size = static_cast<std::size_t>(__builtin_popcount(s));
      const double w = fact[size] * fact[m - size - 1] / fact[m];
      phi[i] += w * (conditional_expectation(tree, row_bins, leaf_value, s | (1u << i)) -
                     conditional_expectation(tree, row_bins, leaf_value, s));
    }
  }
  return phi;
}

}  // namespace oracle
