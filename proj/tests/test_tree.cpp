#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <functional>

#include "duraflow/error.hpp"
#include "duraflow/rng.hpp"
#include "duraflow/tree.hpp"
#include "oracles.hpp"

using namespace duraflow;

namespace {

BinnedMatrix matrix_of(const std::vector<std::vector<std::uint8_t>>& columns, std::size_t bins) {
  return BinnedMatrix::from_columns(columns, std::vector<std::size_t>(columns.size(), bins));
}

// Every training row reaches exactly one leaf and leaf covers add up.
void check_structure(const GrowResult& g, const std::vector<double>& weight) {
  const auto& t = g.tree;
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    const auto& n = t.nodes[i];
    if (n.is_leaf()) continue;
    CHECK(n.left > static_cast<int>(i));
    CHECK(n.right > static_cast<int>(i));
    CHECK(n.cover == doctest::Approx(t.nodes[static_cast<std::size_t>(n.left)].cover +
                                     t.nodes[static_cast<std::size_t>(n.right)].cover));
  }
  double leaf_cover = 0;
  for (const auto& n : t.nodes) leaf_cover += n.is_leaf() ? n.cover : 0.0;
  double total = 0;
  for (double w : weight) total += w;
  CHECK(leaf_cover == doctest::Approx(total));
  for (std::size_t r = 0; r < g.leaf_of_row.size(); ++r) {
    if (weight[r] > 0) {
      REQUIRE(g.leaf_of_row[r] >= 0);
      CHECK(t.nodes[static_cast<std::size_t>(g.leaf_of_row[r])].is_leaf());
    }
  }
}

}  // namespace

TEST_SUITE("tree_core") {
  TEST_CASE("constant column has no edges") {
    const std::vector<double> v(50, 3.5);
    CHECK(build_bins(v).empty());
    BinMap m{{build_bins(v)}};
    CHECK(m.bin(0, 3.5) == 0);
    CHECK(m.bin(0, 1e9) == 0);
  }

  TEST_CASE("three distinct values get three bins") {
    const std::vector<double> v{1, 2, 3};
    const auto edges = build_bins(v);
    REQUIRE(edges.size() == 2);
    BinMap m{{edges}};
    CHECK(m.bin(0, 1) == 0);
    CHECK(m.bin(0, 2) == 1);
    CHECK(m.bin(0, 3) == 2);
  }

  TEST_CASE("uniform values spread evenly over 255 bins") {
    Rng rng(1);
    std::vector<double> v(1000000);
    for (auto& x : v) x = rng.uniform();
    const auto edges = build_bins(v, 255);
    CHECK(edges.size() == 254);
    CHECK(std::is_sorted(edges.begin(), edges.end()));
    BinMap m{{edges}};
    std::vector<std::size_t> counts(255, 0);
    for (double x : v) ++counts[m.bin(0, x)];
    const double expected = 1e6 / 255.0;
    for (auto c : counts) CHECK(std::abs(static_cast<double>(c) - expected) <= 0.02 * expected);
  }

  TEST_CASE("property: edges strictly increase and every value maps into range") {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> v(1 + rng.below(2000));
      const int kind = trial % 3;
      for (auto& x : v) x = kind == 0 ? std::round(rng.normal() * 3) : kind == 1 ? rng.normal() : std::exp(rng.normal() * 3);
      const int max_bins = 2 + static_cast<int>(rng.below(254));
      const auto edges = build_bins(v, max_bins);
      CHECK(edges.size() <= static_cast<std::size_t>(max_bins - 1));
      for (std::size_t k = 1; k < edges.size(); ++k) CHECK(edges[k - 1] < edges[k]);
      BinMap m{{edges}};
      for (double x : v) CHECK(m.bin(0, x) <= edges.size());
    }
  }

  TEST_CASE("gini split example: labels 0,0,1,1 over bins 0..3") {
    NodeHistogram h(1, std::vector<HistBin>(4));
    const double labels[] = {0, 0, 1, 1};
    for (int b = 0; b < 4; ++b) h[0][static_cast<std::size_t>(b)] = {labels[b], 1.0, 1.0};
    GrowParams p;
    p.impurity = Impurity::gini;
    const std::size_t features[] = {0};
    const auto s = best_split(h, features, p);
    REQUIRE(s.has_value());
    CHECK(s->threshold == 1);
    CHECK(s->gain == doctest::Approx(0.5));
  }

  TEST_CASE("pure node has no split") {
    NodeHistogram h(1, std::vector<HistBin>(4, HistBin{1.0, 1.0, 1.0}));
    GrowParams p;
    p.impurity = Impurity::gini;
    const std::size_t features[] = {0};
    CHECK_FALSE(best_split(h, features, p).has_value());
  }

  TEST_CASE("squared-loss split example: targets 1,1,5,5 give gain 16") {
    // gradients at prediction 0 are -y
    NodeHistogram h(1, std::vector<HistBin>(2));
    h[0][0] = {-2.0, 2.0, 2.0};
    h[0][1] = {-10.0, 2.0, 2.0};
    GrowParams p;
    p.lambda_l2 = 0.0;
    const std::size_t features[] = {0};
    const auto s = best_split(h, features, p);
    REQUIRE(s.has_value());
    CHECK(s->threshold == 0);
    CHECK(s->gain == doctest::Approx(16.0));
  }

  TEST_CASE("equal gains prefer the lower feature and bin") {
    NodeHistogram h(2, std::vector<HistBin>(4));
    const double labels[] = {0, 0, 1, 1};
    for (std::size_t f = 0; f < 2; ++f) {
      for (std::size_t b = 0; b < 4; ++b) h[f][b] = {labels[b], 1.0, 1.0};
    }
    h[0][1] = {};  // empty bin: thresholds 0 and 1 of feature 0 tie
    h[0][0] = {0.0, 2.0, 2.0};
    GrowParams p;
    p.impurity = Impurity::gini;
    const std::size_t features[] = {0, 1};
    const auto s = best_split(h, features, p);
    REQUIRE(s.has_value());
    CHECK(s->feature == 0);
    CHECK(s->threshold == 0);
  }

  TEST_CASE("property: best_split matches the brute-force scan") {
    Rng rng(2024);
    for (int trial = 0; trial < 400; ++trial) {
      const bool gini = trial % 2 == 0;
      const auto prob = oracle::random_problem(rng, gini);
      GrowParams p;
      p.impurity = gini ? Impurity::gini : Impurity::sq_loss;
      p.min_samples_leaf = 1.0 + static_cast<double>(rng.below(4));
      p.lambda_l2 = gini ? 0.0 : static_cast<double>(rng.below(3));
      std::vector<std::size_t> features(prob.n_features);
      for (std::size_t f = 0; f < features.size(); ++f) features[f] = f;
      const auto got = best_split(oracle::histogram_of(prob), features, p);
      const auto want = oracle::brute_force_split(prob, gini, p.min_samples_leaf, p.lambda_l2, p.min_gain);
      REQUIRE(got.has_value() == want.has_value());
      if (!got) continue;
      CHECK(got->feature == want->feature);
      CHECK(got->threshold == want->threshold);
      CHECK(got->gain == doctest::Approx(want->gain).epsilon(1e-9));
      if (gini) CHECK(got->gain >= 0.0);
    }
  }

  TEST_CASE("single sample grows a single leaf holding its target") {
    const auto bins = matrix_of({{0}}, 1);
    const std::vector<double> g{-7.0}, h{1.0};
    GrowParams p;
    p.lambda_l2 = 0.0;
    const auto res = grow_tree(bins, GrowTargets{g, h, {}}, p);
    CHECK(res.tree.nodes.size() == 1);
    CHECK(res.tree.values[0] == 7.0);
  }

  TEST_CASE("two leaves reproduce a one-feature step") {
    const auto bins = matrix_of({{0, 0, 1, 1}}, 2);
    const std::vector<double> g{-1, -1, -5, -5}, h(4, 1.0);
    GrowParams p;
    p.lambda_l2 = 0.0;
    p.max_leaves = 2;
    const auto res = grow_tree(bins, GrowTargets{g, h, {}}, p);
    REQUIRE(res.tree.leaf_count() == 2);
    for (std::size_t r = 0; r < 4; ++r) {
      CHECK(res.tree.value(static_cast<std::size_t>(res.leaf_of_row[r]))[0] == -g[r]);
    }
  }

  TEST_CASE("min_samples_leaf 3 on 4 samples leaves a single leaf") {
    const auto bins = matrix_of({{0, 1, 2, 3}}, 4);
    const std::vector<double> g{-1, -2, -3, -4}, h(4, 1.0);
    GrowParams p;
    p.min_samples_leaf = 3;
    CHECK(grow_tree(bins, GrowTargets{g, h, {}}, p).tree.nodes.size() == 1);
  }

  TEST_CASE("classification leaves hold class counts") {
    const auto bins = matrix_of({{0, 0, 1, 1, 1}}, 2);
    const std::vector<double> y{0, 0, 1, 1, 0};
    GrowParams p;
    p.impurity = Impurity::gini;
    const auto res = grow_tree(bins, GrowTargets{y, {}, {}}, p);
    REQUIRE(res.tree.value_dim == 2);
    const auto left = res.tree.value(static_cast<std::size_t>(res.tree.nodes[0].left));
    const auto right = res.tree.value(static_cast<std::size_t>(res.tree.nodes[0].right));
    CHECK(left[0] == 2.0);
    CHECK(left[1] == 0.0);
    CHECK(right[0] == 1.0);
    CHECK(right[1] == 2.0);
  }

  TEST_CASE("invalid parameters are rejected") {
    GrowParams p;
    p.min_samples_leaf = 0.5;
    CHECK_THROWS_AS(validate(p), Error);
    p = {};
    p.max_leaves = 1;
    CHECK_THROWS_AS(validate(p), Error);
  }

  TEST_CASE("property: structure, leaf counts and covers on random growth") {
    Rng rng(55);
    for (int trial = 0; trial < 60; ++trial) {
      const std::size_t n = 2 + rng.below(300), d = 1 + rng.below(4);
      std::vector<std::vector<std::uint8_t>> cols(d, std::vector<std::uint8_t>(n));
      for (auto& c : cols) {
        for (auto& v : c) v = static_cast<std::uint8_t>(rng.below(16));
      }
      const auto bins = matrix_of(cols, 16);
      const bool gini = trial % 2 == 1;
      std::vector<double> g(n), h(n, 1.0), w(n);
      for (std::size_t i = 0; i < n; ++i) {
        g[i] = gini ? static_cast<double>(rng.below(2)) : rng.normal();
        w[i] = static_cast<double>(rng.below(3));
      }
      GrowParams p;
      p.impurity = gini ? Impurity::gini : Impurity::sq_loss;
      p.policy = trial % 3 == 0 ? GrowthPolicy::depth_wise : GrowthPolicy::leaf_wise;
      p.max_leaves = trial % 4 == 0 ? 0 : 2 + static_cast<int>(rng.below(10));
      p.max_depth = trial % 5 == 0 ? 3 : -1;
      p.lambda_l2 = gini ? 0.0 : 1.0;
      Rng tree_rng(trial);
      if (trial % 7 == 0) p.features_per_split = 1;
      const auto res = grow_tree(bins, GrowTargets{g, h, w}, p, &tree_rng);
      check_structure(res, w);
      if (p.max_leaves > 0) CHECK(res.tree.leaf_count() <= static_cast<std::size_t>(p.max_leaves));
      if (p.max_depth >= 0) CHECK(res.tree.depth() <= p.max_depth);
    }
  }

  TEST_CASE("property: leaf-wise growth reaches min(k, achievable) leaves") {
    // Eight distinct bins, targets all different: up to 8 leaves are achievable.
    const auto bins = matrix_of({{0, 1, 2, 3, 4, 5, 6, 7}}, 8);
    const std::vector<double> g{-1, -4, -9, -16, -25, -36, -49, -64}, h(8, 1.0);
    for (int k = 2; k <= 12; ++k) {
      GrowParams p;
      p.max_leaves = k;
      p.lambda_l2 = 0.0;
      CHECK(grow_tree(bins, GrowTargets{g, h, {}}, p).tree.leaf_count() == static_cast<std::size_t>(std::min(k, 8)));
    }
  }

  TEST_CASE("property: monotone transforms that keep bins keep the tree") {
    Rng rng(8);
    std::vector<double> raw(400 * 2);
    for (auto& v : raw) v = rng.uniform(0.1, 10);
    std::vector<double> transformed = raw;
    for (std::size_t i = 0; i < transformed.size(); i += 2) transformed[i] = std::log(raw[i]);
    std::vector<double> y(400), h(400, 1.0);
    for (std::size_t i = 0; i < 400; ++i) y[i] = (raw[2 * i] > 5 ? -3.0 : 1.0) + 0.1 * rng.normal();
    GrowParams p;
    p.max_leaves = 8;
    const auto a = build_bin_map(raw, 2, 32), b = build_bin_map(transformed, 2, 32);
    const auto ta = grow_tree(BinnedMatrix(a, raw, 400), GrowTargets{y, h, {}}, p).tree;
    const auto tb = grow_tree(BinnedMatrix(b, transformed, 400), GrowTargets{y, h, {}}, p).tree;
    CHECK(ta == tb);
  }

  TEST_CASE("predict_tree follows bin thresholds") {
    Tree t;
    t.value_dim = 1;
    t.nodes = {{0, 1, 1, 2, 4.0}, {-1, 0, -1, -1, 2.0}, {-1, 0, -1, -1, 2.0}};
    t.values = {0.0, 10.0, 20.0};
    BinMap bins{{{1.0, 2.0, 3.0}}};
    CHECK(predict_tree(t, std::vector<double>{0.5}, bins)[0] == 10.0);  // bin 0
    CHECK(predict_tree(t, std::vector<double>{2.0}, bins)[0] == 10.0);  // bin 1
    CHECK(predict_tree(t, std::vector<double>{2.5}, bins)[0] == 20.0);  // bin 2
    Tree leaf;
    leaf.nodes = {{}};
    leaf.values = {3.0};
    CHECK(predict_tree(leaf, std::vector<double>{123.0}, bins)[0] == 3.0);
  }

  TEST_CASE("property: traversal equals an independent recursive evaluator") {
    Rng rng(99);
    std::vector<double> x(500 * 3), y(500), h(500, 1.0);
    for (auto& v : x) v = rng.normal();
    for (std::size_t i = 0; i < 500; ++i) y[i] = x[3 * i] * x[3 * i + 1] + rng.normal();
    const auto bins = build_bin_map(x, 3, 64);
    GrowParams p;
    p.max_leaves = 20;
    const auto tree = grow_tree(BinnedMatrix(bins, x, 500), GrowTargets{y, h, {}}, p).tree;
    for (int k = 0; k < 500; ++k) {
      std::vector<double> row{rng.normal() * 2, rng.normal() * 2, rng.normal() * 2};
      CHECK(tree.find_leaf(row, bins) == oracle::walk(tree, bins, row));
    }
  }

  TEST_CASE("dot export lists one statement per line") {
    Tree t;
    t.nodes = {{0, 0, 1, 2, 4.0}, {-1, 0, -1, -1, 1.0}, {-1, 0, -1, -1, 3.0}};
    t.values = {0.0, 1.5, 2.5};
    BinMap bins{{{7.25}}};
    const std::vector<std::string> names{"Humidity(%)"};
    const auto dot = to_dot(t, bins, names);
    CHECK(dot.find("Humidity(%) <= 7.25") != std::string::npos);
    CHECK(dot.find("0 -> 1") != std::string::npos);
    CHECK(dot.find("0 -> 2") != std::string::npos);
    CHECK(dot.rfind("}\n") == dot.size() - 2);
  }
}
