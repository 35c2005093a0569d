#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "duraflow/error.hpp"
#include "duraflow/preprocess.hpp"
#include "duraflow/quantile.hpp"
#include "duraflow/rng.hpp"
#include "duraflow/synth.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace duraflow;

namespace {

FeatureTable one_numeric(std::vector<std::optional<double>> values) {
  FeatureTable t;
  t.columns.push_back({"x", ColumnKind::numeric, std::nullopt});
  t.numbers.push_back(std::move(values));
  t.texts.emplace_back();
  for (std::size_t i = 0; i < t.numbers[0].size(); ++i) {
    t.ids.push_back(std::to_string(i));
    t.durations.push_back(100.0);
  }
  return t;
}

FeatureTable one_text(ColumnKind kind, std::vector<std::optional<std::string>> values) {
  FeatureTable t;
  t.columns.push_back({"c", kind, std::nullopt});
  t.numbers.emplace_back();
  t.texts.push_back(std::move(values));
  for (std::size_t i = 0; i < t.texts[0].size(); ++i) {
    t.ids.push_back(std::to_string(i));
    t.durations.push_back(100.0 + static_cast<double>(i));
  }
  return t;
}

}  // namespace

TEST_SUITE("preprocess") {
  TEST_CASE("duration is the plain difference in minutes") {
    const auto a = Timestamp::from_civil(2018, 4, 2, 8, 0, 0);
    CHECK(compute_duration(a, Timestamp::from_civil(2018, 4, 2, 9, 30, 0)) == 90.0);
    CHECK(compute_duration(a, a) == 0.0);
    CHECK(compute_duration(a, Timestamp::from_civil(2018, 4, 2, 8, 3, 0)) == 3.0);
    CHECK(compute_duration(Timestamp::from_civil(2018, 4, 2, 9), a) == -60.0);
  }

  TEST_CASE("label is 1 strictly below the threshold") {
    CHECK(label_duration(100) == 1);
    CHECK(label_duration(164.0) == 0);
    CHECK(label_duration(360) == 0);
    CHECK(label_duration(163.999) == 1);
  }

  TEST_CASE("property: labelling is monotone") {
    Rng rng(9);
    for (int i = 0; i < 1000; ++i) {
      const double a = rng.uniform(1, 400), b = rng.uniform(1, 400);
      const double lo = std::min(a, b), hi = std::max(a, b);
      if (label_duration(hi) == 1) CHECK(label_duration(lo) == 1);
    }
  }

  TEST_CASE("trimming 1..100 keeps 6..95") {
    std::vector<double> d(100);
    std::iota(d.begin(), d.end(), 1.0);
    const auto t = trim_outliers(d);
    CHECK(t.retained.size() == 90);
    CHECK(d[t.retained.front()] == 6.0);
    CHECK(d[t.retained.back()] == 95.0);
    // 0.05 * 99 = 4.95 -> 5 + 0.95; 0.95 * 99 = 94.05 -> 95 + 0.05
    CHECK(t.lower_cut == doctest::Approx(5.95).epsilon(1e-12));
    CHECK(t.upper_cut == doctest::Approx(95.05).epsilon(1e-12));
  }

  TEST_CASE("trimming needs 20 rows") {
    std::vector<double> d(10, 5.0);
    try {
      trim_outliers(d);
      FAIL("expected TooFewRows");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::TooFewRows);
    }
  }

  TEST_CASE("non-positive durations are removed before the cuts") {
    std::vector<double> d(100);
    std::iota(d.begin(), d.end(), 1.0);
    d.push_back(0.0);
    d.push_back(-4.0);
    const auto t = trim_outliers(d);
    CHECK(t.lower_cut == doctest::Approx(5.95));
    CHECK(std::count(t.removed.begin(), t.removed.end(), 100) == 1);
    CHECK(std::count(t.removed.begin(), t.removed.end(), 101) == 1);
  }

  TEST_CASE("property: trimmed rows lie inside the cuts, removed outside") {
    Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 20 + rng.below(400);
      std::vector<double> d(n);
      for (auto& v : d) v = std::exp(4.0 + rng.normal());
      const auto t = trim_outliers(d);
      CHECK(t.retained.size() + t.removed.size() == n);
      for (auto i : t.retained) CHECK((d[i] >= t.lower_cut && d[i] <= t.upper_cut));
      for (auto i : t.removed) CHECK((d[i] < t.lower_cut || d[i] > t.upper_cut));
      CHECK(t.lower_cut == doctest::Approx(oracle::quantile(d, 0.05)).epsilon(1e-12));
      CHECK(t.upper_cut == doctest::Approx(oracle::quantile(d, 0.95)).epsilon(1e-12));
    }
  }

  TEST_CASE("quantile matches the hand oracle") {
    Rng rng(4);
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<double> v(1 + rng.below(50));
      for (auto& x : v) x = rng.uniform(-10, 10);
      const double q = rng.uniform();
      CHECK(quantile(v, q) == doctest::Approx(oracle::quantile(v, q)).epsilon(1e-12));
    }
  }

  TEST_CASE("mean fills numeric gaps") {
    const auto t = one_numeric({1.0, 2.0, std::nullopt, 3.0});
    const auto stats = fit_imputer(t);
    CHECK(stats.fills[0].number == 2.0);
    const auto filled = apply_imputer(t, stats);
    CHECK(filled.numbers[0][2] == 2.0);
    CHECK(filled.missing_cells() == 0);
  }

  TEST_CASE("mode fills categorical gaps") {
    const auto t = one_text(ColumnKind::categorical, {"A", "A", "B", std::nullopt});
    const auto filled = apply_imputer(t, fit_imputer(t));
    REQUIRE(filled.texts[0][3].has_value());
    CHECK(normalize_category(*filled.texts[0][3]) == "a");
  }

  TEST_CASE("entirely missing column cannot be imputed") {
    const auto t = one_numeric({std::nullopt, std::nullopt});
    try {
      fit_imputer(t);
      FAIL("expected AllMissingColumn");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::AllMissingColumn);
    }
  }

  TEST_CASE("property: imputation is idempotent") {
    const auto batch = synthesize_records(1500, 8);
    const auto table = extract_features(batch.records);
    CHECK(table.missing_cells() > 0);
    const auto stats = fit_imputer(table);
    const auto once = apply_imputer(table, stats);
    const auto twice = apply_imputer(once, stats);
    CHECK(once.missing_cells() == 0);
    CHECK(once.numbers == twice.numbers);
    CHECK(once.texts == twice.texts);
  }

  TEST_CASE("category codes follow frequency, ties lexicographic, 0 unknown") {
    std::vector<std::optional<std::string>> v{"Rain", "clear", "CLEAR", " Fog", "rain", "snow", std::nullopt};
    const auto map = CategoryMap::fit(v);
    CHECK(map.encode("Clear") == 1);
    CHECK(map.encode("rain") == 2);
    CHECK(map.encode("fog") == 3);
    CHECK(map.encode("Snow") == 4);
    CHECK(map.encode("Hail") == 0);
    CHECK(map.decode(3) == "fog");
    CHECK_FALSE(map.decode(0).has_value());
    CHECK(map.known() == 4);
  }

  TEST_CASE("schema has 27 columns including Turning_Loop; flags drop it or Distance") {
    const auto cols = modeling_columns();
    CHECK(cols.size() == 27);
    std::set<std::string> names;
    for (const auto& c : cols) names.insert(c.name);
    CHECK(names.size() == 27);
    CHECK(names.count("Turning_Loop") == 1);
    CHECK(modeling_columns({true, false}).size() == 26);
    CHECK(modeling_columns({true, true}).size() == 25);
  }

  TEST_CASE("encoder maps booleans, day/night and unseen categories") {
    auto r1 = testutil::record("1", 2017, 5, 1, 30);
    r1.poi[11] = true;
    r1.twilight[0] = "Day";
    r1.weather_condition = "Clear";
    auto r2 = testutil::record("2", 2017, 5, 1, 200);
    r2.poi[11] = false;
    r2.twilight[0] = "Night";
    r2.weather_condition = "Clear";
    const std::vector<RawAccidentRecord> train{r1, r2};
    auto table = extract_features(train);
    // Fill every other column so encoding has no gaps.
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      for (auto& v : table.numbers[c]) v = v.value_or(0.0);
      for (auto& v : table.texts[c]) {
        if (!v) v = table.columns[c].kind == ColumnKind::daynight ? "Day" : "Calm";
      }
    }
    const auto schema = fit_encoder(table);
    const auto ds = apply_encoder(table, schema);
    const std::size_t signal = *schema.index_of("Traffic_Signal");
    const std::size_t sun = *schema.index_of("Sunrise_Sunset");
    const std::size_t weather = *schema.index_of("Weather_Condition");
    CHECK(ds.at(0, signal) == 1.0);
    CHECK(ds.at(1, signal) == 0.0);
    CHECK(ds.at(0, sun) == 1.0);
    CHECK(ds.at(1, sun) == 0.0);
    CHECK(ds.labels == std::vector<int>{1, 0});

    table.texts[weather][1] = "Volcanic Ash";
    const auto unseen = apply_encoder(table, schema);
    CHECK(unseen.at(1, weather) == 0.0);
  }

  TEST_CASE("property: encode then decode recovers known categories") {
    const auto batch = synthesize_records(2000, 12);
    const auto table = apply_imputer(extract_features(batch.records), fit_imputer(extract_features(batch.records)));
    const auto schema = fit_encoder(table);
    const auto ds = apply_encoder(table, schema);
    for (std::size_t c = 0; c < schema.size(); ++c) {
      const auto& col = schema.columns[c];
      CHECK(col.encoder.has_value() == (col.kind == ColumnKind::categorical));
      if (!col.encoder) continue;
      for (std::size_t i = 0; i < ds.rows(); ++i) {
        const auto text = col.encoder->decode(static_cast<int>(ds.at(i, c)));
        REQUIRE(text.has_value());
        CHECK(*text == normalize_category(*table.texts[c][i]));
      }
    }
  }

  TEST_CASE("split sizes and seeds") {
    std::vector<int> none;
    const auto s = split_indices(100, none, SplitSpec{});
    CHECK(s.train.size() == 75);
    CHECK(s.test.size() == 25);
    const auto again = split_indices(100, none, SplitSpec{});
    CHECK(s.train == again.train);
    SplitSpec other;
    other.seed = 99;
    CHECK(split_indices(100, none, other).train != s.train);
  }

  TEST_CASE("stratified split of four rows gives one of each label per side") {
    const std::vector<int> labels{1, 1, 0, 0};
    SplitSpec spec;
    spec.train_fraction = 0.5;
    spec.stratified = true;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      spec.seed = seed;
      const auto s = split_indices(4, labels, spec);
      REQUIRE(s.train.size() == 2);
      CHECK(labels[s.train[0]] + labels[s.train[1]] == 1);
      CHECK(labels[s.test[0]] + labels[s.test[1]] == 1);
    }
  }

  TEST_CASE("property: split is a disjoint cover, stratified keeps proportions") {
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 1 + rng.below(300);
      std::vector<int> labels(n);
      for (auto& l : labels) l = rng.uniform() < 0.3 ? 1 : 0;
      SplitSpec spec;
      spec.seed = rng.next();
      spec.train_fraction = rng.uniform(0.1, 0.9);
      spec.stratified = trial % 2 == 0;
      const auto s = split_indices(n, labels, spec);
      std::vector<int> seen(n, 0);
      for (auto i : s.train) ++seen[i];
      for (auto i : s.test) ++seen[i];
      CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
      CHECK(std::is_sorted(s.train.begin(), s.train.end()));
      if (spec.stratified) {
        for (int label : {0, 1}) {
          const double total = static_cast<double>(std::count(labels.begin(), labels.end(), label));
          double in_train = 0;
          for (auto i : s.train) in_train += labels[i] == label;
          CHECK(std::abs(in_train - spec.train_fraction * total) <= 1.0);
        }
      } else {
        CHECK(s.train.size() == static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n))));
      }
    }
  }

  TEST_CASE("pipeline: trims, labels, splits and encodes synthetic data") {
    const auto batch = synthesize_records(4000, 2);
    const auto kept = filter_records(batch.records, FilterSpec{});
    const auto out = preprocess(kept);
    const auto& a = out.artifacts;
    CHECK(a.input_rows == kept.size());
    const double share = static_cast<double>(a.retained_rows) / static_cast<double>(a.input_rows);
    CHECK(share >= 0.89);
    CHECK(share <= 0.91);
    CHECK(out.train.rows() + out.test.rows() == a.retained_rows);
    CHECK(out.train.rows() == static_cast<std::size_t>(std::llround(0.75 * static_cast<double>(a.retained_rows))));
    CHECK(out.train.n_features() == 27);
    for (const auto* ds : {&out.train, &out.test}) {
      for (std::size_t i = 0; i < ds->rows(); ++i) {
        CHECK(ds->labels[i] == (ds->durations[i] < 164.0 ? 1 : 0));
        CHECK(ds->durations[i] >= a.lower_cut);
        CHECK(ds->durations[i] <= a.upper_cut);
      }
      for (double v : ds->values) CHECK(std::isfinite(v));
    }
  }

  TEST_CASE("automatic threshold is the trimmed training mean") {
    const auto batch = synthesize_records(3000, 5);
    PreprocessConfig cfg;
    cfg.threshold_mode = ThresholdMode::automatic;
    const auto out = preprocess(filter_records(batch.records, FilterSpec{}), cfg);
    const double mean = std::accumulate(out.train.durations.begin(), out.train.durations.end(), 0.0) /
                        static_cast<double>(out.train.rows());
    CHECK(out.artifacts.threshold == doctest::Approx(mean).epsilon(1e-12));
    for (std::size_t i = 0; i < out.test.rows(); ++i) {
      CHECK(out.test.labels[i] == label_duration(out.test.durations[i], out.artifacts.threshold));
    }
  }

  TEST_CASE("encode_records reuses fitted artifacts") {
    const auto batch = synthesize_records(3000, 6);
    const auto kept = filter_records(batch.records, FilterSpec{});
    const auto out = preprocess(kept);
    const auto again = encode_records(kept, out.artifacts);
    CHECK(again.rows() == kept.size());
    CHECK(again.schema == out.artifacts.schema);
    // Training rows encode identically through either path.
    const auto& first_id = out.train.ids.front();
    std::size_t pos = 0;
    while (again.ids[pos] != first_id) ++pos;
    for (std::size_t j = 0; j < again.n_features(); ++j) CHECK(again.at(pos, j) == out.train.at(0, j));
  }
}
