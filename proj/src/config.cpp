#include "duraflow/config.hpp"

#include <set>

#include "duraflow/error.hpp"

namespace duraflow {
namespace {

using Json = nlohmann::ordered_json;

// Reads members of one JSON object, rejecting keys it was not asked about.
class Section {
 public:
  Section(const Json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw Error(ErrorCode::InvalidArgument, "config " + label() + " must be an object");
  }

  template <typename T>
  void read(const char* key, T& target) {
    seen_.insert(key);
    if (!doc_.contains(key)) return;
    try {
      target = doc_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::InvalidArgument, "config key " + path_ + key + " has the wrong type");
    }
  }

  const Json* child(const char* key) {
    seen_.insert(key);
    return doc_.contains(key) ? &doc_.at(key) : nullptr;
  }

  std::string path(const char* key) const { return path_ + key + "."; }

  void finish() const {
    for (const auto& [key, value] : doc_.items()) {
      if (!seen_.count(key)) throw Error(ErrorCode::InvalidArgument, "unknown config key " + path_ + key);
    }
  }

 private:
  std::string label() const { return path_.empty() ? "document" : path_.substr(0, path_.size() - 1); }

  const Json& doc_;
  std::string path_;
  std::set<std::string> seen_;
};

Timestamp parse_time(const std::string& text, const char* key) {
  auto t = Timestamp::parse(text);
  if (!t) throw Error(ErrorCode::InvalidArgument, std::string("config key ") + key + ": bad timestamp '" + text + "'");
  return *t;
}

Json forest_json(const ForestParams& p, std::uint64_t seed) {
  return Json{{"n_trees", p.n_trees},     {"mtry", p.mtry},         {"max_depth", p.max_depth},
              {"min_samples_leaf", p.min_samples_leaf}, {"bootstrap", p.bootstrap}, {"max_bins", p.max_bins},
              {"seed", seed}};
}

Json gbdt_json(const GbdtParams& p, std::uint64_t seed) {
  return Json{{"n_rounds", p.n_rounds},
              {"learning_rate", p.learning_rate},
              {"max_leaves", p.max_leaves},
              {"max_depth", p.max_depth},
              {"min_samples_leaf", p.min_samples_leaf},
              {"lambda_l2", p.lambda_l2},
              {"min_gain", p.min_gain},
              {"early_stopping_rounds", p.early_stopping_rounds},
              {"validation_fraction", p.validation_fraction},
              {"max_bins", p.max_bins},
              {"seed", seed}};
}

void read_gbdt(Section s, GbdtParams& p, std::uint64_t& seed) {
  s.read("n_rounds", p.n_rounds);
  s.read("learning_rate", p.learning_rate);
  s.read("max_leaves", p.max_leaves);
  s.read("max_depth", p.max_depth);
  s.read("min_samples_leaf", p.min_samples_leaf);
  s.read("lambda_l2", p.lambda_l2);
  s.read("min_gain", p.min_gain);
  s.read("early_stopping_rounds", p.early_stopping_rounds);
  s.read("validation_fraction", p.validation_fraction);
  s.read("max_bins", p.max_bins);
  s.read("seed", seed);
  s.finish();
}

}  // namespace

Json to_json(const RunConfig& c) {
  const auto& pp = c.preprocess;
  const auto& pl = c.pipeline;
  return Json{
      {"workdir", c.workdir},
      {"threads", c.threads},
      {"ingest",
       {{"header_policy", c.header_policy == HeaderPolicy::strict ? "strict" : "lenient"},
        {"state", c.filter.state_code},
        {"source", c.filter.source_tag},
        {"date_min", c.filter.date_min.to_string()},
        {"date_max", c.filter.date_max.to_string()}}},
      {"preprocess",
       {{"drop_turning_loop", pp.features.drop_turning_loop},
        {"drop_distance", pp.features.drop_distance},
        {"train_fraction", pp.split.train_fraction},
        {"split_seed", pp.split.seed},
        {"stratified", pp.split.stratified},
        {"threshold_mode", pp.threshold_mode == ThresholdMode::fixed ? "fixed" : "auto"},
        {"threshold", pp.threshold},
        {"impute_on_full_data", pp.impute_on_full_data},
        {"lower_quantile", pp.lower_quantile},
        {"upper_quantile", pp.upper_quantile}}},
      {"forest", forest_json(pl.forest, pl.forest_seed)},
      {"short_branch", gbdt_json(pl.short_branch, pl.short_seed)},
      {"long_branch", gbdt_json(pl.long_branch, pl.long_seed)},
      {"explain", {{"sample_cap", c.shap_sample_cap}, {"seed", c.shap_seed}}},
      {"report", {{"series_first_n", c.series_first_n}, {"write_svg", c.write_svg}}},
  };
}

RunConfig run_config_from_json(const Json& doc, RunConfig c) {
  Section top(doc, "");
  top.read("workdir", c.workdir);
  top.read("threads", c.threads);
  if (const Json* j = top.child("ingest")) {
    Section s(*j, top.path("ingest"));
    std::string policy = c.header_policy == HeaderPolicy::strict ? "strict" : "lenient";
    s.read("header_policy", policy);
    if (policy != "strict" && policy != "lenient") {
      throw Error(ErrorCode::InvalidArgument, "ingest.header_policy must be strict or lenient");
    }
    c.header_policy = policy == "strict" ? HeaderPolicy::strict : HeaderPolicy::lenient;
    s.read("state", c.filter.state_code);
    s.read("source", c.filter.source_tag);
    std::string date_min = c.filter.date_min.to_string();
    std::string date_max = c.filter.date_max.to_string();
    s.read("date_min", date_min);
    s.read("date_max", date_max);
    c.filter.date_min = parse_time(date_min, "ingest.date_min");
    c.filter.date_max = parse_time(date_max, "ingest.date_max");
    s.finish();
  }
  if (const Json* j = top.child("preprocess")) {
    Section s(*j, top.path("preprocess"));
    auto& pp = c.preprocess;
    s.read("drop_turning_loop", pp.features.drop_turning_loop);
    s.read("drop_distance", pp.features.drop_distance);
    s.read("train_fraction", pp.split.train_fraction);
    s.read("split_seed", pp.split.seed);
    s.read("stratified", pp.split.stratified);
    std::string mode = pp.threshold_mode == ThresholdMode::fixed ? "fixed" : "auto";
    s.read("threshold_mode", mode);
    if (mode != "fixed" && mode != "auto") {
      throw Error(ErrorCode::InvalidArgument, "preprocess.threshold_mode must be fixed or auto");
    }
    pp.threshold_mode = mode == "fixed" ? ThresholdMode::fixed : ThresholdMode::automatic;
    s.read("threshold", pp.threshold);
    s.read("impute_on_full_data", pp.impute_on_full_data);
    s.read("lower_quantile", pp.lower_quantile);
    s.read("upper_quantile", pp.upper_quantile);
    s.finish();
  }
  if (const Json* j = top.child("forest")) {
    Section s(*j, top.path("forest"));
    auto& p = c.pipeline.forest;
    s.read("n_trees", p.n_trees);
    s.read("mtry", p.mtry);
    s.read("max_depth", p.max_depth);
    s.read("min_samples_leaf", p.min_samples_leaf);
    s.read("bootstrap", p.bootstrap);
    s.read("max_bins", p.max_bins);
    s.read("seed", c.pipeline.forest_seed);
    s.finish();
  }
  if (const Json* j = top.child("short_branch")) {
    read_gbdt(Section(*j, top.path("short_branch")), c.pipeline.short_branch, c.pipeline.short_seed);
  }
  if (const Json* j = top.child("long_branch")) {
    read_gbdt(Section(*j, top.path("long_branch")), c.pipeline.long_branch, c.pipeline.long_seed);
  }
  if (const Json* j = top.child("explain")) {
    Section s(*j, top.path("explain"));
    s.read("sample_cap", c.shap_sample_cap);
    s.read("seed", c.shap_seed);
    s.finish();
  }
  if (const Json* j = top.child("report")) {
    Section s(*j, top.path("report"));
    s.read("series_first_n", c.series_first_n);
    s.read("write_svg", c.write_svg);
    s.finish();
  }
  top.finish();
  if (c.filter.date_max < c.filter.date_min) {
    throw Error(ErrorCode::InvalidArgument, "ingest.date_min must not exceed ingest.date_max");
  }
  const auto& sp = c.preprocess.split;
  if (!(sp.train_fraction > 0.0 && sp.train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "preprocess.train_fraction must be in (0, 1)");
  }
  c.pipeline.threads = c.threads;
  return c;
}

}  // namespace duraflow
