#include "duraflow/serialize.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "duraflow/csv.hpp"
#include "duraflow/error.hpp"

namespace duraflow::io {
namespace {

void check_version(const Json& doc, std::string_view kind) {
  if (!doc.is_object() || !doc.contains("format_version")) {
    throw Error(ErrorCode::Format, std::string(kind) + " document lacks format_version");
  }
  const int version = doc.at("format_version").get<int>();
  if (version != kFormatVersion) {
    throw Error(ErrorCode::Format, std::string(kind) + " format_version " + std::to_string(version) +
                                       " is not supported");
  }
  if (doc.contains("model_kind") && doc.at("model_kind").get<std::string>() != kind) {
    throw Error(ErrorCode::Format, "expected model_kind " + std::string(kind) + ", got " +
                                       doc.at("model_kind").get<std::string>());
  }
}

template <typename F>
auto guarded(std::string_view what, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Format, std::string(what) + ": " + e.what());
  }
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json to_json(const ForestParams& p) {
  return Json{{"n_trees", p.n_trees},     {"mtry", p.mtry},         {"max_depth", p.max_depth},
              {"min_samples_leaf", p.min_samples_leaf}, {"bootstrap", p.bootstrap}, {"max_bins", p.max_bins}};
}

ForestParams forest_params_from_json(const Json& j) {
  ForestParams p;
  p.n_trees = j.at("n_trees").get<int>();
  p.mtry = j.at("mtry").get<int>();
  p.max_depth = j.at("max_depth").get<int>();
  p.min_samples_leaf = j.at("min_samples_leaf").get<double>();
  p.bootstrap = j.at("bootstrap").get<bool>();
  p.max_bins = j.at("max_bins").get<int>();
  return p;
}

Json to_json(const GbdtParams& p) {
  return Json{{"n_rounds", p.n_rounds},
              {"learning_rate", p.learning_rate},
              {"max_leaves", p.max_leaves},
              {"max_depth", p.max_depth},
              {"min_samples_leaf", p.min_samples_leaf},
              {"lambda_l2", p.lambda_l2},
              {"min_gain", p.min_gain},
              {"early_stopping_rounds", p.early_stopping_rounds},
              {"validation_fraction", p.validation_fraction},
              {"max_bins", p.max_bins}};
}

GbdtParams gbdt_params_from_json(const Json& j) {
  GbdtParams p;
  p.n_rounds = j.at("n_rounds").get<int>();
  p.learning_rate = j.at("learning_rate").get<double>();
  p.max_leaves = j.at("max_leaves").get<int>();
  p.max_depth = j.at("max_depth").get<int>();
  p.min_samples_leaf = j.at("min_samples_leaf").get<double>();
  p.lambda_l2 = j.at("lambda_l2").get<double>();
  p.min_gain = j.at("min_gain").get<double>();
  p.early_stopping_rounds = j.at("early_stopping_rounds").get<int>();
  p.validation_fraction = j.at("validation_fraction").get<double>();
  p.max_bins = j.at("max_bins").get<int>();
  return p;
}

Json to_json(const RegressionScores& s) {
  return Json{{"n", s.n}, {"rmse", number_or_null(s.rmse)}, {"mae", number_or_null(s.mae)},
              {"relative_error", number_or_null(s.relative_error)}};
}

Json to_json(const ClassScores& s) {
  return Json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"support", s.support}};
}

std::vector<Json> trees_to_json(const std::vector<Tree>& trees) {
  std::vector<Json> out;
  out.reserve(trees.size());
  for (const auto& t : trees) out.push_back(io::to_json(t));
  return out;
}

std::vector<Tree> trees_from_json(const Json& arr) {
  std::vector<Tree> out;
  out.reserve(arr.size());
  for (const auto& t : arr) out.push_back(io::tree_from_json(t));
  return out;
}

}  // namespace

Json to_json(const Tree& tree) {
  Json feature = Json::array(), threshold = Json::array(), left = Json::array(), right = Json::array(),
       cover = Json::array();
  for (const auto& n : tree.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.bin_threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    cover.push_back(n.cover);
  }
  return Json{{"value_dim", tree.value_dim}, {"feature", feature}, {"bin_threshold", threshold},
              {"left", left},                {"right", right},     {"cover", cover},
              {"values", tree.values}};
}

Tree tree_from_json(const Json& doc) {
  return guarded("tree", [&] {
    Tree t;
    t.value_dim = doc.at("value_dim").get<int>();
    const auto& feature = doc.at("feature");
    const std::size_t n = feature.size();
    const auto& threshold = doc.at("bin_threshold");
    const auto& left = doc.at("left");
    const auto& right = doc.at("right");
    const auto& cover = doc.at("cover");
    t.values = doc.at("values").get<std::vector<double>>();
    if (t.value_dim < 1 || threshold.size() != n || left.size() != n || right.size() != n || cover.size() != n ||
        t.values.size() != n * static_cast<std::size_t>(t.value_dim) || n == 0) {
      throw Error(ErrorCode::Format, "tree arrays have inconsistent lengths");
    }
    t.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto& node = t.nodes[i];
      node.feature = feature[i].get<std::int32_t>();
      node.bin_threshold = threshold[i].get<std::uint32_t>();
      node.left = left[i].get<std::int32_t>();
      node.right = right[i].get<std::int32_t>();
      node.cover = cover[i].get<double>();
      if (!node.is_leaf()) {
        const auto limit = static_cast<std::int32_t>(n);
        if (node.left <= static_cast<std::int32_t>(i) || node.right <= static_cast<std::int32_t>(i) ||
            node.left >= limit || node.right >= limit) {
          throw Error(ErrorCode::Format, "tree node " + std::to_string(i) + " has invalid children");
        }
      }
    }
    return t;
  });
}

Json to_json(const BinMap& bins) { return Json(bins.edges); }

BinMap bin_map_from_json(const Json& doc) {
  return guarded("bin edges", [&] { return BinMap{doc.get<std::vector<std::vector<double>>>()}; });
}

Json to_json(const ForestModel& m) {
  return Json{{"format_version", kFormatVersion},
              {"model_kind", "forest"},
              {"params", to_json(m.params)},
              {"seed", m.seed},
              {"schema_fingerprint", m.schema_fingerprint},
              {"feature_names", m.feature_names},
              {"bin_edges", to_json(m.bin_map)},
              {"trees", trees_to_json(m.trees)}};
}

ForestModel forest_from_json(const Json& doc) {
  check_version(doc, "forest");
  return guarded("forest", [&] {
    ForestModel m;
    m.params = forest_params_from_json(doc.at("params"));
    m.seed = doc.at("seed").get<std::uint64_t>();
    m.schema_fingerprint = doc.at("schema_fingerprint").get<std::string>();
    m.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    m.bin_map = bin_map_from_json(doc.at("bin_edges"));
    m.trees = trees_from_json(doc.at("trees"));
    return m;
  });
}

Json to_json(const GbdtModel& m) {
  return Json{{"format_version", kFormatVersion},
              {"model_kind", "gbdt"},
              {"params", to_json(m.params)},
              {"seed", m.seed},
              {"schema_fingerprint", m.schema_fingerprint},
              {"feature_names", m.feature_names},
              {"base_score", m.base_score},
              {"bin_edges", to_json(m.bin_map)},
              {"trees", trees_to_json(m.trees)}};
}

GbdtModel gbdt_from_json(const Json& doc) {
  check_version(doc, "gbdt");
  return guarded("gbdt", [&] {
    GbdtModel m;
    m.params = gbdt_params_from_json(doc.at("params"));
    m.seed = doc.at("seed").get<std::uint64_t>();
    m.schema_fingerprint = doc.at("schema_fingerprint").get<std::string>();
    m.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    m.base_score = doc.at("base_score").get<double>();
    m.bin_map = bin_map_from_json(doc.at("bin_edges"));
    m.trees = trees_from_json(doc.at("trees"));
    return m;
  });
}

Json to_json(const FeatureSchema& schema) {
  Json cols = Json::array();
  for (const auto& c : schema.columns) {
    Json col{{"name", c.name}, {"kind", std::string(to_string(c.kind))}};
    if (c.encoder) col["categories"] = c.encoder->categories();
    cols.push_back(std::move(col));
  }
  return Json{{"format_version", kFormatVersion},
              {"target_name", schema.target_name},
              {"fingerprint", schema.fingerprint()},
              {"columns", cols}};
}

FeatureSchema schema_from_json(const Json& doc) {
  check_version(doc, "schema");
  auto schema = guarded("schema", [&] {
    FeatureSchema s;
    s.target_name = doc.at("target_name").get<std::string>();
    for (const auto& col : doc.at("columns")) {
      ColumnDescriptor c;
      c.name = col.at("name").get<std::string>();
      c.kind = column_kind_from_string(col.at("kind").get<std::string>());
      if (col.contains("categories")) c.encoder = CategoryMap(col.at("categories").get<std::vector<std::string>>());
      if ((c.kind == ColumnKind::categorical) != c.encoder.has_value()) {
        throw Error(ErrorCode::Format, "column " + c.name + ": categories present iff kind is categorical");
      }
      s.columns.push_back(std::move(c));
    }
    return s;
  });
  if (doc.contains("fingerprint") && doc.at("fingerprint").get<std::string>() != schema.fingerprint()) {
    throw Error(ErrorCode::Format, "schema fingerprint does not match its columns");
  }
  return schema;
}

Json to_json(const PreprocessArtifacts& a) {
  const auto& c = a.config;
  Json fills = Json::array();
  for (const auto& f : a.imputation.fills) {
    Json fill{{"name", f.name}, {"kind", std::string(to_string(f.kind))}};
    if (f.kind == ColumnKind::numeric || f.kind == ColumnKind::boolean) {
      fill["value"] = f.number;
    } else {
      fill["value"] = f.text;
    }
    fills.push_back(std::move(fill));
  }
  return Json{
      {"format_version", kFormatVersion},
      {"config",
       {{"drop_turning_loop", c.features.drop_turning_loop},
        {"drop_distance", c.features.drop_distance},
        {"train_fraction", c.split.train_fraction},
        {"split_seed", c.split.seed},
        {"stratified", c.split.stratified},
        {"threshold_mode", c.threshold_mode == ThresholdMode::fixed ? "fixed" : "auto"},
        {"threshold", c.threshold},
        {"impute_on_full_data", c.impute_on_full_data},
        {"lower_quantile", c.lower_quantile},
        {"upper_quantile", c.upper_quantile}}},
      {"schema", to_json(a.schema)},
      {"imputation", fills},
      {"threshold", a.threshold},
      {"lower_cut", a.lower_cut},
      {"upper_cut", a.upper_cut},
      {"input_rows", a.input_rows},
      {"retained_rows", a.retained_rows},
  };
}

PreprocessArtifacts artifacts_from_json(const Json& doc) {
  check_version(doc, "preprocess");
  return guarded("preprocess", [&] {
    PreprocessArtifacts a;
    const auto& c = doc.at("config");
    a.config.features.drop_turning_loop = c.at("drop_turning_loop").get<bool>();
    a.config.features.drop_distance = c.at("drop_distance").get<bool>();
    a.config.split.train_fraction = c.at("train_fraction").get<double>();
    a.config.split.seed = c.at("split_seed").get<std::uint64_t>();
    a.config.split.stratified = c.at("stratified").get<bool>();
    const auto mode = c.at("threshold_mode").get<std::string>();
    if (mode != "fixed" && mode != "auto") throw Error(ErrorCode::Format, "unknown threshold_mode " + mode);
    a.config.threshold_mode = mode == "fixed" ? ThresholdMode::fixed : ThresholdMode::automatic;
    a.config.threshold = c.at("threshold").get<double>();
    a.config.impute_on_full_data = c.at("impute_on_full_data").get<bool>();
    a.config.lower_quantile = c.at("lower_quantile").get<double>();
    a.config.upper_quantile = c.at("upper_quantile").get<double>();
    a.schema = schema_from_json(doc.at("schema"));
    for (const auto& f : doc.at("imputation")) {
      ColumnFill fill;
      fill.name = f.at("name").get<std::string>();
      fill.kind = column_kind_from_string(f.at("kind").get<std::string>());
      if (fill.kind == ColumnKind::numeric || fill.kind == ColumnKind::boolean) {
        fill.number = f.at("value").get<double>();
      } else {
        fill.text = f.at("value").get<std::string>();
      }
      a.imputation.fills.push_back(std::move(fill));
    }
    a.threshold = doc.at("threshold").get<double>();
    a.lower_cut = doc.at("lower_cut").get<double>();
    a.upper_cut = doc.at("upper_cut").get<double>();
    a.input_rows = doc.at("input_rows").get<std::size_t>();
    a.retained_rows = doc.at("retained_rows").get<std::size_t>();
    return a;
  });
}

Json to_json(const BilevelModel& m) {
  const auto& p = m.provenance;
  Json doc{{"format_version", kFormatVersion},
           {"model_kind", "bilevel"},
           {"threshold", m.threshold},
           {"schema", to_json(m.schema)},
           {"provenance",
            {{"forest_seed", p.forest_seed},
             {"short_seed", p.short_seed},
             {"long_seed", p.long_seed},
             {"data_hash", p.data_hash},
             {"train_rows", p.train_rows},
             {"short_rows", p.short_rows},
             {"long_rows", p.long_rows}}},
           {"classifier", to_json(m.classifier)},
           {"short_regressor", to_json(m.short_regressor)},
           {"long_regressor", to_json(m.long_regressor)}};
  if (m.preprocessing) doc["preprocessing"] = to_json(*m.preprocessing);
  return doc;
}

BilevelModel bilevel_from_json(const Json& doc) {
  check_version(doc, "bilevel");
  auto m = guarded("bilevel", [&] {
    BilevelModel m;
    m.threshold = doc.at("threshold").get<double>();
    m.schema = schema_from_json(doc.at("schema"));
    const auto& p = doc.at("provenance");
    m.provenance.forest_seed = p.at("forest_seed").get<std::uint64_t>();
    m.provenance.short_seed = p.at("short_seed").get<std::uint64_t>();
    m.provenance.long_seed = p.at("long_seed").get<std::uint64_t>();
    m.provenance.data_hash = p.at("data_hash").get<std::string>();
    m.provenance.train_rows = p.at("train_rows").get<std::size_t>();
    m.provenance.short_rows = p.at("short_rows").get<std::size_t>();
    m.provenance.long_rows = p.at("long_rows").get<std::size_t>();
    m.classifier = forest_from_json(doc.at("classifier"));
    m.short_regressor = gbdt_from_json(doc.at("short_regressor"));
    m.long_regressor = gbdt_from_json(doc.at("long_regressor"));
    if (doc.contains("preprocessing")) m.preprocessing = artifacts_from_json(doc.at("preprocessing"));
    return m;
  });
  const auto fp = m.schema.fingerprint();
  if (m.classifier.schema_fingerprint != fp || m.short_regressor.schema_fingerprint != fp ||
      m.long_regressor.schema_fingerprint != fp) {
    throw Error(ErrorCode::SchemaMismatch, "bundle sub-models disagree on the schema fingerprint");
  }
  if (!(m.threshold > 0.0)) throw Error(ErrorCode::Format, "bundle threshold must be positive");
  return m;
}

Json to_json(const ClassificationReport& r) {
  const auto& c = r.confusion;
  return Json{{"confusion", {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}}},
              {"accuracy", r.accuracy},
              {"per_class", {{"long", to_json(r.per_class[0])}, {"short", to_json(r.per_class[1])}}},
              {"macro", to_json(r.macro)},
              {"weighted", to_json(r.weighted)}};
}

Json to_json(const BilevelEvaluation& ev) {
  Json branches = Json::object();
  const char* names[] = {"long", "short"};
  for (std::size_t b : {std::size_t{1}, std::size_t{0}}) {
    branches[names[b]] = Json{{"standalone", to_json(ev.branches[b].standalone)},
                              {"routed", to_json(ev.branches[b].routed)},
                              {"correctly_routed", to_json(ev.branches[b].correctly_routed)}};
  }
  return Json{{"format_version", kFormatVersion},
              {"rows", ev.actual.size()},
              {"combined", to_json(ev.combined)},
              {"branches", branches},
              {"classification", to_json(ev.classification)},
              {"misroute_rate", ev.misroute_rate}};
}

Json to_json(const ShapSummary& s) {
  Json features = Json::array();
  for (std::size_t rank = 0; rank < s.ranking.size(); ++rank) {
    const std::size_t j = s.ranking[rank];
    features.push_back(Json{{"feature", s.features[j]}, {"mean_abs_shap", s.mean_abs[j]}, {"rank", rank + 1}});
  }
  return Json{{"format_version", kFormatVersion}, {"rows_used", s.rows_used}, {"features", features}};
}

std::string evaluation_text(const BilevelEvaluation& ev) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4);
  const auto& r = ev.classification;
  s << "Classification (positive class: short)\n";
  s << std::left << std::setw(12) << "" << std::right << std::setw(11) << "precision" << std::setw(11) << "recall"
    << std::setw(11) << "f1-score" << std::setw(10) << "support" << '\n';
  auto line = [&](const std::string& name, const ClassScores& c) {
    s << std::left << std::setw(12) << name << std::right << std::setw(11) << c.precision << std::setw(11)
      << c.recall << std::setw(11) << c.f1 << std::setw(10) << c.support << '\n';
  };
  line("long (0)", r.per_class[0]);
  line("short (1)", r.per_class[1]);
  line("macro", r.macro);
  line("weighted", r.weighted);
  s << std::left << std::setw(12) << "accuracy" << std::right << std::setw(33) << r.accuracy << std::setw(10)
    << r.confusion.total() << '\n';
  s << "confusion: tp=" << r.confusion.tp << " fp=" << r.confusion.fp << " tn=" << r.confusion.tn
    << " fn=" << r.confusion.fn << '\n';
  s << "misroute rate: " << ev.misroute_rate << "\n\n";

  s << "Regression (minutes)\n";
  s << std::left << std::setw(28) << "" << std::right << std::setw(8) << "n" << std::setw(12) << "RMSE"
    << std::setw(12) << "MAE" << std::setw(16) << "relative error" << '\n';
  auto reg = [&](const std::string& name, const RegressionScores& c) {
    s << std::left << std::setw(28) << name << std::right << std::setw(8) << c.n << std::setw(12) << c.rmse
      << std::setw(12) << c.mae << std::setw(16) << c.relative_error << '\n';
  };
  reg("short branch, standalone", ev.branches[1].standalone);
  reg("long branch, standalone", ev.branches[0].standalone);
  reg("short branch, routed", ev.branches[1].routed);
  reg("long branch, routed", ev.branches[0].routed);
  reg("short, correctly routed", ev.branches[1].correctly_routed);
  reg("long, correctly routed", ev.branches[0].correctly_routed);
  reg("combined pipeline", ev.combined);
  return s.str();
}

void write_encoded_csv(std::ostream& out, const EncodedDataset& data) {
  std::vector<std::string> header{"id"};
  for (const auto& c : data.schema.columns) header.push_back(c.name);
  header.push_back(data.schema.target_name);
  header.push_back("label");
  csv::write_row(out, header);
  std::vector<std::string> row(header.size());
  const std::size_t d = data.n_features();
  for (std::size_t i = 0; i < data.rows(); ++i) {
    row[0] = i < data.ids.size() ? data.ids[i] : std::to_string(i);
    for (std::size_t j = 0; j < d; ++j) row[1 + j] = csv::format_double(data.at(i, j));
    row[1 + d] = csv::format_double(data.durations[i]);
    row[2 + d] = i < data.labels.size() ? std::to_string(data.labels[i]) : "";
    csv::write_row(out, row);
  }
}

EncodedDataset read_encoded_csv(std::istream& in, const FeatureSchema& schema) {
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header) throw Error(ErrorCode::MissingHeader, "encoded CSV has no header row");
  const auto& h = header->fields;
  const std::size_t d = schema.size();
  if (h.size() < 1 + d || h[0] != "id") throw Error(ErrorCode::SchemaMismatch, "encoded CSV header does not start with id and the schema features");
  for (std::size_t j = 0; j < d; ++j) {
    if (h[1 + j] != schema.columns[j].name) {
      throw Error(ErrorCode::SchemaMismatch, "encoded CSV column " + std::to_string(1 + j) + " is '" + h[1 + j] +
                                                 "', schema expects '" + schema.columns[j].name + "'");
    }
  }
  const bool has_duration = h.size() > 1 + d && h[1 + d] == schema.target_name;
  const bool has_label = h.size() > 2 + d && h[2 + d] == "label";
  if (h.size() != 1 + d + has_duration + has_label) {
    throw Error(ErrorCode::SchemaMismatch, "encoded CSV has unexpected trailing columns");
  }

  EncodedDataset ds;
  ds.schema = schema;
  auto parse = [](const std::string& text, std::size_t line) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    if (first != last && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (text.empty() || res.ec != std::errc() || res.ptr != last) {
      throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line) + ": '" + text + "' is not a number");
    }
    return v;
  };
  while (auto row = reader.next()) {
    const auto& f = row->fields;
    if (f.size() != h.size()) {
      throw Error(ErrorCode::MalformedRow, "line " + std::to_string(row->line) + ": expected " +
                                               std::to_string(h.size()) + " fields, got " + std::to_string(f.size()));
    }
    ds.ids.push_back(f[0]);
    for (std::size_t j = 0; j < d; ++j) ds.values.push_back(parse(f[1 + j], row->line));
    ds.durations.push_back(has_duration ? parse(f[1 + d], row->line) : std::numeric_limits<double>::quiet_NaN());
    if (has_label && !f[2 + d].empty()) {
      const double label = parse(f[2 + d], row->line);
      if (label != 0.0 && label != 1.0) {
        throw Error(ErrorCode::MalformedRow, "line " + std::to_string(row->line) + ": label must be 0 or 1");
      }
      ds.labels.push_back(static_cast<int>(label));
    }
  }
  if (!ds.labels.empty() && ds.labels.size() != ds.durations.size()) {
    throw Error(ErrorCode::MalformedRow, "label column is only partly filled");
  }
  return ds;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Format, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& doc) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace duraflow::io
