#include "doctest.h"

#include <cmath>

#include "duraflow/bilevel.hpp"
#include "duraflow/error.hpp"
#include "duraflow/rng.hpp"
#include "duraflow/serialize.hpp"
#include "helpers.hpp"

using namespace duraflow;

namespace {

// Feature 0 carries the duration so stubs can see the true label.
EncodedDataset mixed(std::size_t n_short, std::size_t n_long, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> rows;
  std::vector<double> dur;
  for (std::size_t i = 0; i < n_short + n_long; ++i) {
    const bool is_short = i < n_short;
    const double d = is_short ? rng.uniform(30, 160) : rng.uniform(170, 600);
    rows.push_back({d, rng.normal(), is_short ? rng.uniform(0, 1) : rng.uniform(0.5, 1.5)});
    dur.push_back(d);
  }
  return testutil::numeric_dataset(rows, dur);
}

PipelineConfig small_config() {
  PipelineConfig c;
  c.forest.n_trees = 8;
  c.forest.mtry = 2;
  c.forest.min_samples_leaf = 2;
  for (auto* g : {&c.short_branch, &c.long_branch}) {
    g->n_rounds = 40;
    g->learning_rate = 0.3;
    g->min_samples_leaf = 2;
    g->max_leaves = 8;
    g->early_stopping_rounds = 0;
  }
  return c;
}

GbdtModel constant_model(double value, std::size_t n_features) {
  GbdtModel m;
  m.bin_map.edges.assign(n_features, {});
  m.base_score = value;
  return m;
}

RegimeClassifier oracle_stub() {
  return [](std::span<const double> row) {
    ClassPrediction p;
    p.label = label_duration(row[0]);
    p.proba = {1.0 - p.label, static_cast<double>(p.label)};
    return p;
  };
}

}  // namespace

TEST_SUITE("bilevel_pipeline") {
  TEST_CASE("branches train on true labels") {
    const auto ds = mixed(8, 8, 1);
    const auto m = train_bilevel(ds, small_config());
    CHECK(m.provenance.short_rows == 8);
    CHECK(m.provenance.long_rows == 8);
    CHECK(m.provenance.train_rows == 16);
    CHECK(m.short_regressor.base_score < m.threshold);
    CHECK(m.long_regressor.base_score >= m.threshold);
    CHECK(m.classifier.schema_fingerprint == m.short_regressor.schema_fingerprint);
    CHECK(m.classifier.schema_fingerprint == m.long_regressor.schema_fingerprint);
    CHECK(m.schema.fingerprint() == m.classifier.schema_fingerprint);
  }

  TEST_CASE("a missing branch is reported") {
    const auto ds = mixed(10, 1, 2);
    auto all_short = ds.subset(std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    CHECK_THROWS_AS(train_bilevel(all_short, small_config()), Error);
    try {
      train_bilevel(ds, small_config());
      FAIL("expected EmptyBranch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptyBranch);
    }
  }

  TEST_CASE("routing uses the predicted label and never blends") {
    const auto ds = mixed(60, 40, 3);
    const auto m = train_bilevel(ds, small_config());
    const auto test = mixed(30, 30, 4);
    for (std::size_t i = 0; i < test.rows(); ++i) {
      const auto pred = predict_bilevel(m, test.row(i));
      const auto cls = predict_forest(m.classifier, test.row(i));
      CHECK(pred.branch == cls.label);
      CHECK(pred.proba == cls.proba);
      const double expected = pred.branch == 1 ? predict_gbdt(m.short_regressor, test.row(i))
                                               : predict_gbdt(m.long_regressor, test.row(i));
      CHECK(pred.minutes == expected);
    }
  }

  TEST_CASE("a classifier that always says long yields the long regressor") {
    const auto ds = mixed(50, 50, 5);
    const auto m = train_bilevel(ds, small_config());
    const RegimeClassifier always_long = [](std::span<const double>) { return ClassPrediction{0, {1.0, 0.0}}; };
    const auto ev = evaluate_bilevel(always_long, m.short_regressor, m.long_regressor, ds);
    for (std::size_t i = 0; i < ds.rows(); ++i) {
      CHECK(ev.predicted[i] == predict_gbdt(m.long_regressor, ds.row(i)));
      CHECK(ev.routed_branch[i] == 0);
    }
    CHECK(ev.branches[1].routed.n == 0);
  }

  TEST_CASE("perfect routing and regressors give zero error") {
    std::vector<std::vector<double>> rows;
    std::vector<double> dur;
    for (int i = 0; i < 20; ++i) {
      dur.push_back(i % 2 ? 60.0 : 300.0);
      rows.push_back({dur.back()});
    }
    const auto ds = testutil::numeric_dataset(rows, dur);
    const auto ev = evaluate_bilevel(oracle_stub(), constant_model(60, 1), constant_model(300, 1), ds);
    CHECK(ev.combined.rmse == 0.0);
    CHECK(ev.combined.mae == 0.0);
    CHECK(ev.misroute_rate == 0.0);
  }

  TEST_CASE("property: with true-label routing, combined RMSE is the weighted RMS of the branches") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      const auto train = mixed(40 + 10 * seed, 30, seed);
      const auto test = mixed(25, 15 + seed, seed + 100);
      const auto m = train_bilevel(train, small_config());
      const auto ev = evaluate_bilevel(oracle_stub(), m.short_regressor, m.long_regressor, test);
      const auto& s = ev.branches[1].correctly_routed;
      const auto& l = ev.branches[0].correctly_routed;
      CHECK(s.n + l.n == test.rows());
      const double combined =
          std::sqrt((s.n * s.rmse * s.rmse + l.n * l.rmse * l.rmse) / static_cast<double>(s.n + l.n));
      CHECK(ev.combined.rmse == doctest::Approx(combined).epsilon(1e-12));
      CHECK(ev.combined.rmse >= std::min(s.rmse, l.rmse));
      CHECK(ev.branches[1].standalone.rmse == doctest::Approx(s.rmse).epsilon(1e-12));
    }
  }

  TEST_CASE("misrouted rows can pull combined RMSE below both correctly-routed branches") {
    // Exhaustive random search over 10-row sets with constant regressors.
    Rng rng(314);
    bool found = false;
    for (int trial = 0; trial < 5000 && !found; ++trial) {
      std::vector<std::vector<double>> rows;
      std::vector<double> dur;
      std::vector<int> route(10);
      for (int i = 0; i < 10; ++i) {
        dur.push_back(rng.uniform(20, 400));
        rows.push_back({static_cast<double>(i)});
        route[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(2));
      }
      const auto ds = testutil::numeric_dataset(rows, dur);
      const RegimeClassifier stub = [route](std::span<const double> row) {
        const int b = route[static_cast<std::size_t>(row[0])];
        return ClassPrediction{b, {1.0 - b, static_cast<double>(b)}};
      };
      const auto ev = evaluate_bilevel(stub, constant_model(rng.uniform(20, 200), 1),
                                       constant_model(rng.uniform(150, 400), 1), ds);
      const auto& s = ev.branches[1].correctly_routed;
      const auto& l = ev.branches[0].correctly_routed;
      if (s.n > 0 && l.n > 0 && ev.combined.rmse < std::min(s.rmse, l.rmse)) found = true;
    }
    CHECK(found);
  }

  TEST_CASE("property: misroute rate is one minus accuracy") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto train = mixed(70, 50, seed * 7);
      const auto test = mixed(40, 40, seed * 7 + 1);
      auto cfg = small_config();
      cfg.forest.n_trees = 2;
      cfg.forest.max_depth = 2;
      const auto m = train_bilevel(train, cfg);
      const auto ev = evaluate_bilevel(m, test);
      CHECK(ev.misroute_rate == doctest::Approx(1.0 - ev.classification.accuracy).epsilon(1e-12));
      CHECK(ev.branches[0].routed.n + ev.branches[1].routed.n == test.rows());
    }
  }

  TEST_CASE("fixed config and data give byte-identical bundles and reports") {
    const auto train = mixed(80, 60, 9);
    const auto test = mixed(30, 30, 10);
    auto cfg = small_config();
    const auto a = train_bilevel(train, cfg);
    cfg.threads = 3;
    const auto b = train_bilevel(train, cfg);
    CHECK(io::to_json(a).dump() == io::to_json(b).dump());
    CHECK(io::to_json(evaluate_bilevel(a, test)).dump() == io::to_json(evaluate_bilevel(b, test)).dump());
    const auto c = io::bilevel_from_json(io::Json::parse(io::to_json(a).dump()));
    CHECK(io::to_json(evaluate_bilevel(c, test)).dump() == io::to_json(evaluate_bilevel(a, test)).dump());
  }

  TEST_CASE("evaluation data must match the model schema") {
    const auto m = train_bilevel(mixed(30, 30, 11), small_config());
    auto other = mixed(5, 5, 12);
    other.schema.columns[1].name = "renamed";
    CHECK_THROWS_AS(evaluate_bilevel(m, other), Error);
  }
}
