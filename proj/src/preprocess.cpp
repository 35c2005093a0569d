#include "duraflow/preprocess.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>

#include "duraflow/error.hpp"
#include "duraflow/hash.hpp"
#include "duraflow/quantile.hpp"
#include "duraflow/rng.hpp"

namespace duraflow {
namespace {

constexpr std::size_t kMinTrimRows = 20;

using Record = RawAccidentRecord;

// Where a modeling column's raw value comes from.
struct ColumnSource {
  std::string_view name;
  ColumnKind kind;
  std::optional<double> Record::*number = nullptr;
  std::optional<std::string> Record::*text = nullptr;
  int poi = -1;
  int twilight = -1;
};

std::vector<ColumnSource> all_sources() {
  std::vector<ColumnSource> s = {
      {"Distance(mi)", ColumnKind::numeric, &Record::distance_mi},
      {"Temperature(F)", ColumnKind::numeric, &Record::temperature_f},
      {"Wind_Chill(F)", ColumnKind::numeric, &Record::wind_chill_f},
      {"Humidity(%)", ColumnKind::numeric, &Record::humidity_pct},
      {"Pressure(in)", ColumnKind::numeric, &Record::pressure_in},
      {"Visibility(mi)", ColumnKind::numeric, &Record::visibility_mi},
      {"Wind_Direction", ColumnKind::categorical, nullptr, &Record::wind_direction},
      {"Wind_Speed(mph)", ColumnKind::numeric, &Record::wind_speed_mph},
      {"Precipitation(in)", ColumnKind::numeric, &Record::precipitation_in},
      {"Weather_Condition", ColumnKind::categorical, nullptr, &Record::weather_condition},
  };
  for (std::size_t i = 0; i < kPoiCount; ++i) {
    s.push_back({poi_columns()[i], ColumnKind::boolean, nullptr, nullptr, static_cast<int>(i)});
  }
  for (std::size_t i = 0; i < kTwilightCount; ++i) {
    s.push_back({twilight_columns()[i], ColumnKind::daynight, nullptr, nullptr, -1, static_cast<int>(i)});
  }
  return s;
}

std::vector<ColumnSource> selected_sources(const FeatureOptions& options) {
  std::vector<ColumnSource> out;
  for (const auto& s : all_sources()) {
    if (options.drop_turning_loop && s.name == "Turning_Loop") continue;
    if (options.drop_distance && s.name == "Distance(mi)") continue;
    out.push_back(s);
  }
  return out;
}

bool holds_numbers(ColumnKind kind) {
  return kind == ColumnKind::numeric || kind == ColumnKind::boolean;
}

std::optional<std::string> canonical_daynight(const std::optional<std::string>& text) {
  if (!text) return std::nullopt;
  const std::string norm = normalize_category(*text);
  if (norm == "day") return "Day";
  if (norm == "night") return "Night";
  return std::nullopt;
}

// Most frequent value; ties go to the smallest.
template <typename T>
T mode_of(const std::map<T, std::size_t>& counts) {
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

}  // namespace

double compute_duration(const Timestamp& start, const Timestamp& end) {
  return static_cast<double>(end.micros() - start.micros()) / 1e6 / 60.0;
}

int label_duration(double duration, double threshold) { return duration < threshold ? 1 : 0; }

TrimResult trim_outliers(std::span<const double> durations, double lower_q, double upper_q) {
  if (!(lower_q >= 0.0 && lower_q < upper_q && upper_q <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "trim quantiles must satisfy 0 <= lower < upper <= 1");
  }
  std::vector<double> usable;
  usable.reserve(durations.size());
  for (double d : durations) {
    if (std::isfinite(d) && d > 0.0) usable.push_back(d);
  }
  if (usable.size() < kMinTrimRows) {
    throw Error(ErrorCode::TooFewRows, "trimming needs at least " + std::to_string(kMinTrimRows) +
                                           " positive durations, got " + std::to_string(usable.size()));
  }
  std::sort(usable.begin(), usable.end());

  TrimResult result;
  result.lower_cut = quantile_sorted(usable, lower_q);
  result.upper_cut = quantile_sorted(usable, upper_q);
  for (std::size_t i = 0; i < durations.size(); ++i) {
    const double d = durations[i];
    const bool keep = std::isfinite(d) && d > 0.0 && d >= result.lower_cut && d <= result.upper_cut;
    (keep ? result.retained : result.removed).push_back(i);
  }
  return result;
}

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::numeric: return "numeric";
    case ColumnKind::boolean: return "boolean";
    case ColumnKind::daynight: return "daynight";
    case ColumnKind::categorical: return "categorical";
  }
  return "numeric";
}

ColumnKind column_kind_from_string(std::string_view text) {
  if (text == "numeric") return ColumnKind::numeric;
  if (text == "boolean") return ColumnKind::boolean;
  if (text == "daynight") return ColumnKind::daynight;
  if (text == "categorical") return ColumnKind::categorical;
  throw Error(ErrorCode::Format, "unknown column kind '" + std::string(text) + "'");
}

std::string normalize_category(std::string_view text) {
  std::size_t b = 0, e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  std::string out(text.substr(b, e - b));
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

CategoryMap::CategoryMap(std::vector<std::string> categories_by_code)
    : categories_(std::move(categories_by_code)) {
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    if (!codes_.emplace(categories_[i], static_cast<int>(i + 1)).second) {
      throw Error(ErrorCode::Format, "duplicate category '" + categories_[i] + "'");
    }
  }
}

CategoryMap CategoryMap::fit(std::span<const std::optional<std::string>> values) {
  std::map<std::string, std::size_t> counts;
  for (const auto& v : values) {
    if (!v) continue;
    std::string key = normalize_category(*v);
    if (!key.empty()) ++counts[key];
  }
  std::vector<std::pair<std::string, std::size_t>> ordered(counts.begin(), counts.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> categories;
  categories.reserve(ordered.size());
  for (auto& [text, count] : ordered) categories.push_back(std::move(text));
  return CategoryMap(std::move(categories));
}

int CategoryMap::encode(std::string_view text) const {
  auto it = codes_.find(normalize_category(text));
  return it == codes_.end() ? 0 : it->second;
}

std::optional<std::string> CategoryMap::decode(int code) const {
  if (code < 1 || static_cast<std::size_t>(code) > categories_.size()) return std::nullopt;
  return categories_[static_cast<std::size_t>(code - 1)];
}

std::vector<std::string> FeatureSchema::names() const {
  std::vector<std::string> out;
  out.reserve(columns.size());
  for (const auto& c : columns) out.push_back(c.name);
  return out;
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  return std::nullopt;
}

std::string FeatureSchema::fingerprint() const {
  Fnv1a h;
  h.update(target_name);
  for (const auto& c : columns) {
    h.update("\x1f");
    h.update(c.name);
    h.update("\x1e");
    h.update(to_string(c.kind));
    if (c.encoder) {
      for (const auto& cat : c.encoder->categories()) {
        h.update("\x1d");
        h.update(cat);
      }
    }
  }
  return h.hex();
}

std::vector<ColumnDescriptor> modeling_columns(const FeatureOptions& options) {
  std::vector<ColumnDescriptor> out;
  for (const auto& s : selected_sources(options)) out.push_back({std::string(s.name), s.kind, {}});
  return out;
}

FeatureTable FeatureTable::subset(std::span<const std::size_t> rows) const {
  FeatureTable out;
  out.columns = columns;
  out.numbers.resize(columns.size());
  out.texts.resize(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (!numbers[c].empty()) {
      out.numbers[c].reserve(rows.size());
      for (std::size_t r : rows) out.numbers[c].push_back(numbers[c][r]);
    }
    if (!texts[c].empty()) {
      out.texts[c].reserve(rows.size());
      for (std::size_t r : rows) out.texts[c].push_back(texts[c][r]);
    }
  }
  for (std::size_t r : rows) {
    out.ids.push_back(ids[r]);
    out.durations.push_back(durations[r]);
  }
  return out;
}

std::size_t FeatureTable::missing_cells() const {
  std::size_t missing = 0;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    for (const auto& v : numbers[c]) missing += !v.has_value();
    for (const auto& v : texts[c]) missing += !v.has_value();
  }
  return missing;
}

FeatureTable extract_features(std::span<const RawAccidentRecord> records,
                              const FeatureOptions& options) {
  const auto sources = selected_sources(options);
  FeatureTable table;
  table.columns = modeling_columns(options);
  table.numbers.resize(sources.size());
  table.texts.resize(sources.size());
  for (std::size_t c = 0; c < sources.size(); ++c) {
    (holds_numbers(sources[c].kind) ? table.numbers[c].reserve(records.size())
                                    : table.texts[c].reserve(records.size()));
  }
  for (const auto& rec : records) {
    table.ids.push_back(rec.id);
    table.durations.push_back(compute_duration(rec.start_time, rec.end_time));
    for (std::size_t c = 0; c < sources.size(); ++c) {
      const auto& s = sources[c];
      switch (s.kind) {
        case ColumnKind::numeric: table.numbers[c].push_back(rec.*(s.number)); break;
        case ColumnKind::boolean: {
          const auto& flag = rec.poi[static_cast<std::size_t>(s.poi)];
          table.numbers[c].push_back(flag ? std::optional<double>(*flag ? 1.0 : 0.0) : std::nullopt);
          break;
        }
        case ColumnKind::daynight:
          table.texts[c].push_back(canonical_daynight(rec.twilight[static_cast<std::size_t>(s.twilight)]));
          break;
        case ColumnKind::categorical: {
          const auto& raw = rec.*(s.text);
          std::optional<std::string> norm;
          if (raw) {
            norm = normalize_category(*raw);
            if (norm->empty()) norm.reset();
          }
          table.texts[c].push_back(std::move(norm));
          break;
        }
      }
    }
  }
  return table;
}

ImputationStats fit_imputer(const FeatureTable& rows) {
  ImputationStats stats;
  for (std::size_t c = 0; c < rows.columns.size(); ++c) {
    const auto& col = rows.columns[c];
    ColumnFill fill{col.name, col.kind, 0.0, {}};
    bool observed = false;
    if (col.kind == ColumnKind::numeric) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& v : rows.numbers[c]) {
        if (v) {
          sum += *v;
          ++n;
        }
      }
      observed = n > 0;
      if (observed) fill.number = sum / static_cast<double>(n);
    } else if (col.kind == ColumnKind::boolean) {
      std::map<double, std::size_t> counts;
      for (const auto& v : rows.numbers[c]) {
        if (v) ++counts[*v];
      }
      observed = !counts.empty();
      if (observed) fill.number = mode_of(counts);
    } else {
      std::map<std::string, std::size_t> counts;
      for (const auto& v : rows.texts[c]) {
        if (v) ++counts[*v];
      }
      observed = !counts.empty();
      if (observed) fill.text = mode_of(counts);
    }
    if (!observed) {
      throw Error(ErrorCode::AllMissingColumn, "column '" + col.name + "' has no observed value");
    }
    stats.fills.push_back(std::move(fill));
  }
  return stats;
}

FeatureTable apply_imputer(FeatureTable rows, const ImputationStats& stats) {
  for (const auto& fill : stats.fills) {
    std::size_t c = 0;
    while (c < rows.columns.size() && rows.columns[c].name != fill.name) ++c;
    if (c == rows.columns.size()) {
      throw Error(ErrorCode::SchemaMismatch, "imputation column '" + fill.name + "' absent");
    }
    if (holds_numbers(fill.kind)) {
      for (auto& v : rows.numbers[c]) {
        if (!v) v = fill.number;
      }
    } else {
      for (auto& v : rows.texts[c]) {
        if (!v) v = fill.text;
      }
    }
  }
  return rows;
}

std::vector<double> EncodedDataset::column(std::size_t j) const {
  std::vector<double> out(rows());
  for (std::size_t i = 0; i < rows(); ++i) out[i] = at(i, j);
  return out;
}

EncodedDataset EncodedDataset::subset(std::span<const std::size_t> rows_) const {
  EncodedDataset out;
  out.schema = schema;
  const std::size_t d = n_features();
  out.values.reserve(rows_.size() * d);
  for (std::size_t r : rows_) {
    out.values.insert(out.values.end(), values.begin() + static_cast<std::ptrdiff_t>(r * d),
                      values.begin() + static_cast<std::ptrdiff_t>((r + 1) * d));
    out.durations.push_back(durations[r]);
    out.labels.push_back(labels[r]);
    out.ids.push_back(ids[r]);
  }
  return out;
}

FeatureSchema fit_encoder(const FeatureTable& train) {
  FeatureSchema schema;
  for (std::size_t c = 0; c < train.columns.size(); ++c) {
    ColumnDescriptor desc{train.columns[c].name, train.columns[c].kind, {}};
    if (desc.kind == ColumnKind::categorical) desc.encoder = CategoryMap::fit(train.texts[c]);
    schema.columns.push_back(std::move(desc));
  }
  return schema;
}

EncodedDataset apply_encoder(const FeatureTable& rows, const FeatureSchema& schema, double threshold) {
  EncodedDataset ds;
  ds.schema = schema;
  const std::size_t n = rows.rows();
  const std::size_t d = schema.size();
  ds.values.assign(n * d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    const auto& desc = schema.columns[j];
    std::size_t c = 0;
    while (c < rows.columns.size() && rows.columns[c].name != desc.name) ++c;
    if (c == rows.columns.size() || rows.columns[c].kind != desc.kind) {
      throw Error(ErrorCode::SchemaMismatch, "rows lack schema column '" + desc.name + "'");
    }
    if (desc.kind == ColumnKind::categorical && !desc.encoder) {
      throw Error(ErrorCode::SchemaMismatch, "column '" + desc.name + "' has no fitted encoder");
    }
    for (std::size_t i = 0; i < n; ++i) {
      double value = 0.0;
      if (holds_numbers(desc.kind)) {
        const auto& v = rows.numbers[c][i];
        if (!v) throw Error(ErrorCode::SchemaMismatch, "missing cell in '" + desc.name + "'; impute first");
        value = *v;
      } else {
        const auto& v = rows.texts[c][i];
        if (!v) throw Error(ErrorCode::SchemaMismatch, "missing cell in '" + desc.name + "'; impute first");
        if (desc.kind == ColumnKind::daynight) {
          value = normalize_category(*v) == "day" ? 1.0 : 0.0;
        } else {
          value = desc.encoder->encode(*v);
        }
      }
      ds.values[i * d + j] = value;
    }
  }
  ds.durations = rows.durations;
  ds.ids = rows.ids;
  ds.labels.reserve(n);
  for (double dur : rows.durations) ds.labels.push_back(label_duration(dur, threshold));
  return ds;
}

SplitIndices split_indices(std::size_t n, std::span<const int> labels, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "train_fraction must lie in (0, 1)");
  }
  if (n == 0) throw Error(ErrorCode::EmptyInput, "cannot split an empty dataset");
  Rng rng(spec.seed);
  SplitIndices out;
  auto take = [&](std::vector<std::size_t> pool) {
    rng.shuffle(std::span<std::size_t>(pool));
    const auto k = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(pool.size())));
    out.train.insert(out.train.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    out.test.insert(out.test.end(), pool.begin() + static_cast<std::ptrdiff_t>(k), pool.end());
  };
  if (spec.stratified) {
    if (labels.size() != n) throw Error(ErrorCode::InvalidArgument, "stratified split needs one label per row");
    for (int cls : {0, 1}) {
      std::vector<std::size_t> pool;
      for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] == cls) pool.push_back(i);
      }
      take(std::move(pool));
    }
  } else {
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    take(std::move(pool));
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::pair<EncodedDataset, EncodedDataset> split_dataset(const EncodedDataset& ds, const SplitSpec& spec) {
  const auto idx = split_indices(ds.rows(), ds.labels, spec);
  return {ds.subset(idx.train), ds.subset(idx.test)};
}

PreprocessOutput preprocess(std::span<const RawAccidentRecord> records, const PreprocessConfig& config) {
  if (config.threshold_mode == ThresholdMode::automatic && config.split.stratified) {
    throw Error(ErrorCode::InvalidArgument,
                "automatic threshold is fitted on the train split and cannot drive a stratified split");
  }
  if (!(config.threshold > 0.0)) throw Error(ErrorCode::InvalidArgument, "threshold must be positive");

  const FeatureTable all = extract_features(records, config.features);
  const TrimResult trim = trim_outliers(all.durations, config.lower_quantile, config.upper_quantile);
  const FeatureTable kept = all.subset(trim.retained);

  std::vector<int> labels;
  labels.reserve(kept.rows());
  for (double d : kept.durations) labels.push_back(label_duration(d, config.threshold));
  const SplitIndices split = split_indices(kept.rows(), labels, config.split);

  FeatureTable train = kept.subset(split.train);
  FeatureTable test = kept.subset(split.test);

  PreprocessOutput out;
  auto& art = out.artifacts;
  art.config = config;
  art.threshold = config.threshold;
  if (config.threshold_mode == ThresholdMode::automatic) {
    if (train.rows() == 0) throw Error(ErrorCode::TooFewRows, "empty train split");
    art.threshold = std::accumulate(train.durations.begin(), train.durations.end(), 0.0) /
                    static_cast<double>(train.rows());
  }
  art.lower_cut = trim.lower_cut;
  art.upper_cut = trim.upper_cut;
  art.input_rows = records.size();
  art.retained_rows = kept.rows();

  art.imputation = fit_imputer(config.impute_on_full_data ? kept : train);
  train = apply_imputer(std::move(train), art.imputation);
  test = apply_imputer(std::move(test), art.imputation);
  art.schema = fit_encoder(train);
  out.train = apply_encoder(train, art.schema, art.threshold);
  out.test = apply_encoder(test, art.schema, art.threshold);
  return out;
}

EncodedDataset encode_records(std::span<const RawAccidentRecord> records,
                              const PreprocessArtifacts& artifacts) {
  FeatureTable table = extract_features(records, artifacts.config.features);
  table = apply_imputer(std::move(table), artifacts.imputation);
  return apply_encoder(table, artifacts.schema, artifacts.threshold);
}

}  // namespace duraflow
