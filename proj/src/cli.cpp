#include "duraflow/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "CLI11.hpp"

#include "duraflow/bilevel.hpp"
#include "duraflow/config.hpp"
#include "duraflow/csv.hpp"
#include "duraflow/error.hpp"
#include "duraflow/explain.hpp"
#include "duraflow/hash.hpp"
#include "duraflow/ingest.hpp"
#include "duraflow/preprocess.hpp"
#include "duraflow/serialize.hpp"
#include "duraflow/stats_report.hpp"
#include "duraflow/svg.hpp"
#include "duraflow/synth.hpp"

namespace duraflow::cli {
namespace {

namespace fs = std::filesystem;
using io::Json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// State shared by one subcommand invocation.
struct Run {
  std::string command;
  RunConfig config;
  fs::path workdir;
  Json inputs = Json::array();
  Json outputs = Json::array();
  Json summary = Json::object();
  std::ostream* out = nullptr;

  fs::path output_path(const std::string& name) {
    const fs::path p = workdir / name;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    outputs.push_back(p.generic_string());
    return p;
  }

  std::string input(const std::string& given, const std::string& fallback) {
    const std::string path = given.empty() ? (workdir / fallback).generic_string() : given;
    if (!fs::exists(path)) throw Error(ErrorCode::Io, "input not found: " + path);
    inputs.push_back(Json{{"path", path}, {"fnv1a", hash_file(path)}});
    return path;
  }

  void write_text(const std::string& name, const std::string& text) {
    std::ofstream f(output_path(name), std::ios::binary);
    f << text;
    if (!f) throw Error(ErrorCode::Io, "cannot write " + (workdir / name).generic_string());
  }

  void write_with(const std::string& name, const std::function<void(std::ostream&)>& fill) {
    std::ostringstream s;
    fill(s);
    write_text(name, s.str());
  }

  void write_json(const std::string& name, const Json& doc) { io::write_json_file(output_path(name), doc); }

  void finish() {
    Json manifest{{"tool", "duraflow"},
                  {"tool_version", kToolVersion},
                  {"format_version", io::kFormatVersion},
                  {"command", command},
                  {"config", to_json(config)},
                  {"inputs", inputs},
                  {"outputs", outputs},
                  {"summary", summary}};
    io::write_json_file(workdir / (command + "_manifest.json"), manifest);
    *out << command << ": wrote " << outputs.size() << " file(s) under " << workdir.generic_string() << '\n';
  }
};

template <typename T>
void apply(const CLI::Option* opt, const T& value, T& target) {
  if (opt->count() > 0) target = value;
}

RecordBatch read_batch(const std::string& path, HeaderPolicy policy) { return parse_records_file(path, policy); }

void fill_labels(EncodedDataset& ds, double threshold) {
  if (!ds.labels.empty()) return;
  for (double d : ds.durations) {
    if (!std::isfinite(d)) throw Error(ErrorCode::SchemaMismatch, "data has no duration_minutes column");
    ds.labels.push_back(label_duration(d, threshold));
  }
}

EncodedDataset read_encoded(const std::string& path, const FeatureSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return io::read_encoded_csv(in, schema);
}

std::string svg_name(const std::string& base) { return "report/" + base + ".svg"; }

void write_shap_summary_csv(std::ostream& s, const ShapSummary& summary) {
  csv::write_row(s, {"feature", "mean_abs_shap", "rank"});
  for (std::size_t rank = 0; rank < summary.ranking.size(); ++rank) {
    const std::size_t j = summary.ranking[rank];
    csv::write_row(s, {summary.features[j], csv::format_double(summary.mean_abs[j]), std::to_string(rank + 1)});
  }
}

std::string shap_chart(const ShapSummary& summary, const std::string& title) {
  std::vector<std::string> labels;
  std::vector<double> values;
  for (std::size_t j : summary.ranking) {
    labels.push_back(summary.features[j]);
    values.push_back(summary.mean_abs[j]);
  }
  return svg::bar_chart(labels, values, title);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bi-level accident duration modeling toolkit", "duraflow"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  // Options shared by every subcommand.
  std::string config_path, workdir_flag;
  int threads_flag = 1;
  std::vector<CLI::Option*> threads_opts, workdir_opts;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file; flags override its values")->check(CLI::ExistingFile);
    workdir_opts.push_back(sub->add_option("--workdir", workdir_flag, "Directory for all outputs"));
    threads_opts.push_back(
        sub->add_option("--threads", threads_flag, "Worker threads (fallback: DURAFLOW_THREADS)")->check(CLI::PositiveNumber));
  };

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic accident table");
  common(synth);
  std::size_t synth_rows = 20000;
  std::uint64_t synth_seed = 1;
  std::string synth_out = "synth.csv";
  synth->add_option("--rows", synth_rows, "Number of rows")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--out", synth_out, "Output file name under the workdir");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Parse and filter the accident table");
  common(ingest);
  std::string ingest_input, header_policy, state, source, date_min, date_max;
  ingest->add_option("--input", ingest_input, "Accident CSV")->required();
  auto* policy_opt = ingest->add_option("--header-policy", header_policy, "strict or lenient")
                         ->check(CLI::IsMember({"strict", "lenient"}));
  auto* state_opt = ingest->add_option("--state", state, "State code to keep");
  auto* source_opt = ingest->add_option("--source", source, "Source column value to keep; empty keeps all");
  auto* date_min_opt = ingest->add_option("--date-min", date_min, "Earliest start time kept");
  auto* date_max_opt = ingest->add_option("--date-max", date_max, "Latest start time kept");

  // preprocess
  auto* prep = app.add_subcommand("preprocess", "Trim, impute, encode, label and split");
  common(prep);
  std::string prep_input, threshold_mode;
  double threshold = kDefaultThresholdMinutes, train_fraction = 0.75;
  std::uint64_t split_seed = 0;
  bool drop_turning_loop = false, drop_distance = false, stratified = false, impute_full = false;
  prep->add_option("--input", prep_input, "Filtered accident CSV (default: <workdir>/filtered.csv)");
  auto* pol2_opt = prep->add_option("--header-policy", header_policy, "strict or lenient")
                       ->check(CLI::IsMember({"strict", "lenient"}));
  auto* mode_opt = prep->add_option("--threshold-mode", threshold_mode, "fixed or auto")
                       ->check(CLI::IsMember({"fixed", "auto"}));
  auto* threshold_opt = prep->add_option("--threshold", threshold, "Short/long cut in minutes")->check(CLI::PositiveNumber);
  auto* fraction_opt = prep->add_option("--train-fraction", train_fraction, "Training share")->check(CLI::Range(0.0, 1.0));
  auto* split_seed_opt = prep->add_option("--split-seed", split_seed, "Split seed");
  auto* turning_opt = prep->add_flag("--drop-turning-loop", drop_turning_loop, "Use the 26 listed features");
  auto* distance_opt = prep->add_flag("--drop-distance", drop_distance, "Exclude Distance(mi)");
  auto* strat_opt = prep->add_flag("--stratified", stratified, "Stratify the split by label");
  auto* impute_opt = prep->add_flag("--impute-on-full-data", impute_full, "Fit imputation on all retained rows");

  // train
  auto* train = app.add_subcommand("train", "Train the classifier and both branch regressors");
  common(train);
  std::string train_data, train_prep, train_out = "model.json";
  int n_trees = 0, n_rounds = 0;
  std::uint64_t forest_seed = 0, short_seed = 0, long_seed = 0;
  train->add_option("--data", train_data, "Encoded training CSV (default: <workdir>/train.csv)");
  train->add_option("--preprocess", train_prep, "Preprocess artifacts (default: <workdir>/preprocess.json)");
  train->add_option("--out", train_out, "Model bundle name under the workdir");
  auto* trees_opt = train->add_option("--n-trees", n_trees, "Forest size")->check(CLI::PositiveNumber);
  auto* rounds_opt = train->add_option("--n-rounds", n_rounds, "Boosting rounds per branch")->check(CLI::NonNegativeNumber);
  auto* fseed_opt = train->add_option("--forest-seed", forest_seed, "Forest seed");
  auto* sseed_opt = train->add_option("--short-seed", short_seed, "Short-branch seed");
  auto* lseed_opt = train->add_option("--long-seed", long_seed, "Long-branch seed");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score the pipeline on an encoded split");
  common(evaluate);
  std::string eval_model, eval_data;
  std::size_t first_n = 100;
  evaluate->add_option("--model", eval_model, "Model bundle (default: <workdir>/model.json)");
  evaluate->add_option("--data", eval_data, "Encoded CSV (default: <workdir>/test.csv)");
  auto* first_n_opt = evaluate->add_option("--first-n", first_n, "Rows in the prediction series");

  // predict
  auto* predict = app.add_subcommand("predict", "Predict durations for encoded or raw rows");
  common(predict);
  std::string pred_model, pred_data, pred_out = "predictions.csv";
  bool pred_raw = false;
  predict->add_option("--model", pred_model, "Model bundle (default: <workdir>/model.json)");
  predict->add_option("--data", pred_data, "Encoded CSV, or an accident CSV with --raw")->required();
  predict->add_flag("--raw", pred_raw, "Input is an accident table; encode it with the bundle's preprocessing");
  predict->add_option("--out", pred_out, "Output name under the workdir");

  // explain
  auto* explain = app.add_subcommand("explain", "TreeSHAP attributions and feature rankings");
  common(explain);
  std::string exp_model, exp_data, exp_row;
  std::size_t sample_cap = kDefaultShapSampleCap, classifier_cap = 0;
  explain->add_option("--model", exp_model, "Model bundle (default: <workdir>/model.json)");
  explain->add_option("--data", exp_data, "Encoded CSV (default: <workdir>/test.csv)");
  auto* cap_opt = explain->add_option("--sample-cap", sample_cap, "Rows per branch summary")->check(CLI::PositiveNumber);
  explain->add_option("--classifier-cap", classifier_cap, "Rows for a classifier summary (0 skips it)");
  explain->add_option("--row", exp_row, "Explain the row with this id");

  // report
  auto* report = app.add_subcommand("report", "Descriptive statistics and plot data");
  common(report);
  std::string rep_input, rep_model;
  int dot_depth = 4;
  report->add_option("--input", rep_input, "Filtered accident CSV (default: <workdir>/filtered.csv)");
  report->add_option("--model", rep_model, "Model bundle for the tree export");
  report->add_option("--tree-depth", dot_depth, "Depth limit of the exported tree");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  Run run;
  run.command = sub->get_name();
  run.out = &out;

  try {
    // Effective config: defaults, then the config file, then flags.
    bool threads_from_file = false;
    if (!config_path.empty()) {
      const Json doc = io::read_json_file(config_path);
      run.config = run_config_from_json(doc);
      threads_from_file = doc.is_object() && doc.contains("threads");
      run.inputs.push_back(Json{{"path", config_path}, {"fnv1a", hash_file(config_path)}});
    }
    RunConfig& c = run.config;
    bool threads_given = false;
    for (auto* o : threads_opts) threads_given = threads_given || o->count() > 0;
    if (threads_given) {
      c.threads = threads_flag;
    } else if (!threads_from_file) {
      if (const char* env = std::getenv("DURAFLOW_THREADS")) {
        try {
          c.threads = std::max(1, std::stoi(env));
        } catch (const std::exception&) {
          throw UsageError("DURAFLOW_THREADS must be a positive integer");
        }
      }
    }
    for (auto* o : workdir_opts) {
      if (o->count() > 0) c.workdir = workdir_flag;
    }
    if (policy_opt->count() || pol2_opt->count()) {
      c.header_policy = header_policy == "lenient" ? HeaderPolicy::lenient : HeaderPolicy::strict;
    }
    apply(state_opt, state, c.filter.state_code);
    apply(source_opt, source, c.filter.source_tag);
    for (auto [opt, text, target] : {std::tuple{date_min_opt, &date_min, &c.filter.date_min},
                                     std::tuple{date_max_opt, &date_max, &c.filter.date_max}}) {
      if (opt->count() == 0) continue;
      auto t = Timestamp::parse(*text);
      if (!t) throw UsageError("bad timestamp '" + *text + "'");
      *target = *t;
    }
    if (c.filter.date_max < c.filter.date_min) throw UsageError("--date-min must not exceed --date-max");
    auto& pp = c.preprocess;
    if (mode_opt->count()) pp.threshold_mode = threshold_mode == "auto" ? ThresholdMode::automatic : ThresholdMode::fixed;
    apply(threshold_opt, threshold, pp.threshold);
    apply(fraction_opt, train_fraction, pp.split.train_fraction);
    apply(split_seed_opt, split_seed, pp.split.seed);
    if (turning_opt->count()) pp.features.drop_turning_loop = true;
    if (distance_opt->count()) pp.features.drop_distance = true;
    if (strat_opt->count()) pp.split.stratified = true;
    if (impute_opt->count()) pp.impute_on_full_data = true;
    auto& pl = c.pipeline;
    apply(trees_opt, n_trees, pl.forest.n_trees);
    if (rounds_opt->count()) pl.short_branch.n_rounds = pl.long_branch.n_rounds = n_rounds;
    apply(fseed_opt, forest_seed, pl.forest_seed);
    apply(sseed_opt, short_seed, pl.short_seed);
    apply(lseed_opt, long_seed, pl.long_seed);
    apply(first_n_opt, first_n, c.series_first_n);
    apply(cap_opt, sample_cap, c.shap_sample_cap);
    pl.threads = c.threads;
    run.workdir = c.workdir;
    fs::create_directories(run.workdir);

    if (sub == synth) {
      const RecordBatch batch = synthesize_records(synth_rows, synth_seed);
      run.write_with(synth_out, [&](std::ostream& s) { write_records(s, batch); });
      run.summary = {{"rows", synth_rows}, {"seed", synth_seed}};
    } else if (sub == ingest) {
      const std::string path = run.input(ingest_input, "");
      RecordBatch batch = read_batch(path, c.header_policy);
      const std::size_t parsed = batch.records.size();
      batch.records = filter_records(batch.records, c.filter);
      run.write_with("filtered.csv", [&](std::ostream& s) { write_records(s, batch); });
      run.write_with("ingest_diagnostics.csv", [&](std::ostream& s) {
        csv::write_row(s, {"line", "reason"});
        for (const auto& d : batch.diagnostics) csv::write_row(s, {std::to_string(d.line), d.reason});
      });
      run.summary = {{"data_rows", batch.data_rows},
                     {"records", parsed},
                     {"diagnostics", batch.diagnostics.size()},
                     {"kept", batch.records.size()}};
    } else if (sub == prep) {
      const std::string path = run.input(prep_input, "filtered.csv");
      const RecordBatch batch = read_batch(path, c.header_policy);
      const PreprocessOutput result = preprocess(batch.records, pp);
      run.write_with("train.csv", [&](std::ostream& s) { io::write_encoded_csv(s, result.train); });
      run.write_with("test.csv", [&](std::ostream& s) { io::write_encoded_csv(s, result.test); });
      run.write_json("preprocess.json", io::to_json(result.artifacts));
      const auto& a = result.artifacts;
      run.summary = {{"input_rows", a.input_rows},      {"retained_rows", a.retained_rows},
                     {"train_rows", result.train.rows()}, {"test_rows", result.test.rows()},
                     {"threshold", a.threshold},          {"lower_cut", a.lower_cut},
                     {"upper_cut", a.upper_cut}};
    } else if (sub == train) {
      const std::string prep_path = run.input(train_prep, "preprocess.json");
      const std::string data_path = run.input(train_data, "train.csv");
      const PreprocessArtifacts artifacts = io::artifacts_from_json(io::read_json_file(prep_path));
      EncodedDataset data = read_encoded(data_path, artifacts.schema);
      fill_labels(data, artifacts.threshold);
      BilevelModel model = train_bilevel(data, pl);
      model.threshold = artifacts.threshold;
      model.preprocessing = artifacts;
      run.write_json(train_out, io::to_json(model));
      run.summary = {{"train_rows", model.provenance.train_rows},
                     {"short_rows", model.provenance.short_rows},
                     {"long_rows", model.provenance.long_rows},
                     {"forest_trees", model.classifier.trees.size()},
                     {"short_rounds", model.short_regressor.trees.size()},
                     {"long_rounds", model.long_regressor.trees.size()}};
    } else if (sub == evaluate) {
      const std::string model_path = run.input(eval_model, "model.json");
      const std::string data_path = run.input(eval_data, "test.csv");
      const BilevelModel model = io::bilevel_from_json(io::read_json_file(model_path));
      EncodedDataset data = read_encoded(data_path, model.schema);
      fill_labels(data, model.threshold);
      const BilevelEvaluation ev = evaluate_bilevel(model, data);
      Json metrics = io::to_json(ev);
      metrics["model_data_hash"] = model.provenance.data_hash;
      run.write_json("report/metrics.json", metrics);
      run.write_text("report/metrics.txt", io::evaluation_text(ev));
      const auto series = prediction_series(ev.actual, ev.predicted, ev.routed_branch, c.series_first_n);
      run.write_with("report/prediction_series.csv", [&](std::ostream& s) { write_series_csv(s, series); });
      if (c.write_svg) {
        run.write_text(svg_name("prediction_series"),
                       svg::series_plot(series, "Actual vs predicted duration, first " +
                                                    std::to_string(series.size()) + " test rows"));
      }
      run.summary = {{"rows", data.rows()},
                     {"accuracy", ev.classification.accuracy},
                     {"combined_rmse", ev.combined.rmse},
                     {"combined_mae", ev.combined.mae}};
      out << io::evaluation_text(ev);
    } else if (sub == predict) {
      const std::string model_path = run.input(pred_model, "model.json");
      const std::string data_path = run.input(pred_data, "");
      const BilevelModel model = io::bilevel_from_json(io::read_json_file(model_path));
      EncodedDataset data;
      if (pred_raw) {
        if (!model.preprocessing) throw Error(ErrorCode::Format, "bundle has no preprocessing artifacts; --raw needs them");
        const RecordBatch batch = read_batch(data_path, c.header_policy);
        data = encode_records(batch.records, *model.preprocessing);
      } else {
        data = read_encoded(data_path, model.schema);
      }
      run.write_with(pred_out, [&](std::ostream& s) {
        csv::write_row(s, {"id", "predicted_minutes", "branch", "p_long", "p_short"});
        for (std::size_t i = 0; i < data.rows(); ++i) {
          const auto p = predict_bilevel(model, data.row(i));
          csv::write_row(s, {data.ids[i], csv::format_double(p.minutes), p.branch == 1 ? "short" : "long",
                             csv::format_double(p.proba[0]), csv::format_double(p.proba[1])});
        }
      });
      run.summary = {{"rows", data.rows()}};
    } else if (sub == explain) {
      const std::string model_path = run.input(exp_model, "model.json");
      const std::string data_path = run.input(exp_data, "test.csv");
      const BilevelModel model = io::bilevel_from_json(io::read_json_file(model_path));
      EncodedDataset data = read_encoded(data_path, model.schema);
      fill_labels(data, model.threshold);
      Json summaries = Json::object();
      summaries["format_version"] = io::kFormatVersion;
      summaries["note"] = "regressor attributions in minutes; classifier attributions explain P(short)";
      const std::pair<const char*, int> branches[] = {{"short", 1}, {"long", 0}};
      for (const auto& [name, label] : branches) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < data.rows(); ++i) {
          if (data.labels[i] == label) rows.push_back(i);
        }
        if (rows.empty()) continue;
        const EncodedDataset subset = data.subset(rows);
        const GbdtModel& reg = label == 1 ? model.short_regressor : model.long_regressor;
        const ShapSummary s = shap_summary(reg, subset, c.shap_sample_cap, c.shap_seed, c.threads);
        const std::string base = std::string("shap_") + name;
        run.write_with("report/" + base + "_summary.csv", [&](std::ostream& o) { write_shap_summary_csv(o, s); });
        if (c.write_svg) {
          run.write_text(svg_name(base + "_summary"),
                         shap_chart(s, std::string("Mean |SHAP|, ") + name + "-duration regressor (minutes)"));
        }
        summaries[name] = io::to_json(s);
      }
      if (classifier_cap > 0) {
        const ShapSummary s = shap_summary(model.classifier, data, classifier_cap, c.shap_seed, c.threads);
        run.write_with("report/shap_classifier_summary.csv", [&](std::ostream& o) { write_shap_summary_csv(o, s); });
        if (c.write_svg) run.write_text(svg_name("shap_classifier_summary"), shap_chart(s, "Mean |SHAP|, P(short)"));
        summaries["classifier"] = io::to_json(s);
      }
      if (!exp_row.empty()) {
        std::size_t index = data.rows();
        for (std::size_t i = 0; i < data.rows(); ++i) {
          if (data.ids[i] == exp_row) {
            index = i;
            break;
          }
        }
        if (index == data.rows()) throw Error(ErrorCode::InvalidArgument, "no row with id " + exp_row);
        const auto routed = predict_bilevel(model, data.row(index));
        const GbdtModel& reg = routed.branch == 1 ? model.short_regressor : model.long_regressor;
        const ShapVector sv = tree_shap(reg, data.row(index));
        run.write_with("report/shap_row.csv", [&](std::ostream& o) {
          csv::write_row(o, {"feature", "phi"});
          for (std::size_t j = 0; j < sv.phi.size(); ++j) {
            csv::write_row(o, {model.schema.columns[j].name, csv::format_double(sv.phi[j])});
          }
        });
        summaries["row"] = {{"id", exp_row},
                            {"branch", routed.branch == 1 ? "short" : "long"},
                            {"base_value", sv.base_value},
                            {"prediction", predict_gbdt_raw(reg, data.row(index))}};
      }
      run.write_json("report/shap_summary.json", summaries);
    } else if (sub == report) {
      const std::string path = run.input(rep_input, "filtered.csv");
      const RecordBatch batch = read_batch(path, c.header_policy);
      std::vector<double> raw;
      for (const auto& r : batch.records) {
        const double d = compute_duration(r.start_time, r.end_time);
        if (std::isfinite(d) && d > 0.0) raw.push_back(d);
      }
      const PreprocessOutput prepared = preprocess(batch.records, pp);
      std::vector<double> trimmed = prepared.train.durations;
      trimmed.insert(trimmed.end(), prepared.test.durations.begin(), prepared.test.durations.end());

      run.write_with("report/duration_summary.csv", [&](std::ostream& s) {
        write_summary_csv(s, {{"before_trim", summary_stats(raw)}, {"after_trim", summary_stats(trimmed)}});
      });
      const FiveNumber five = five_number(trimmed);
      run.write_with("report/duration_boxplot.csv", [&](std::ostream& s) { write_five_number_csv(s, five); });
      run.write_with("report/duration_histogram.csv", [&](std::ostream& s) { write_histogram_csv(s, histogram(trimmed)); });
      run.write_with("report/duration_histogram_raw.csv", [&](std::ostream& s) { write_histogram_csv(s, histogram(raw)); });

      // Correlation over the encoded features of every retained row plus duration.
      const EncodedDataset& tr = prepared.train;
      const EncodedDataset& te = prepared.test;
      std::vector<std::vector<double>> columns;
      std::vector<std::string> names = tr.schema.names();
      for (std::size_t j = 0; j < tr.n_features(); ++j) {
        auto col = tr.column(j);
        const auto more = te.column(j);
        col.insert(col.end(), more.begin(), more.end());
        columns.push_back(std::move(col));
      }
      columns.push_back(trimmed);
      names.push_back(tr.schema.target_name);
      const CorrelationMatrix corr = correlation_matrix(columns, names);
      run.write_with("report/correlation.csv", [&](std::ostream& s) { write_correlation_csv(s, corr); });

      // Category counts over the encoded codes, decoded back to text.
      for (std::size_t j = 0; j < tr.n_features(); ++j) {
        const auto& col = tr.schema.columns[j];
        if (col.kind == ColumnKind::numeric) continue;
        std::map<double, std::size_t> counts;
        for (double v : columns[j]) ++counts[v];
        std::string file = col.name;
        for (char& ch : file) {
          if (!std::isalnum(static_cast<unsigned char>(ch))) ch = '_';
        }
        run.write_with("report/category_counts_" + file + ".csv", [&](std::ostream& s) {
          csv::write_row(s, {"value", "count"});
          for (const auto& [v, n] : counts) {
            std::string label;
            if (col.kind == ColumnKind::categorical) {
              label = col.encoder->decode(static_cast<int>(v)).value_or("(unknown)");
            } else if (col.kind == ColumnKind::daynight) {
              label = v == 1.0 ? "Day" : "Night";
            } else {
              label = v == 1.0 ? "True" : "False";
            }
            csv::write_row(s, {label, std::to_string(n)});
          }
        });
      }

      if (c.write_svg) {
        run.write_text(svg_name("duration_boxplot"), svg::boxplot(five, "Accident duration after trimming (minutes)"));
        run.write_text(svg_name("correlation"),
                       svg::heatmap(corr, "Pearson correlation (categoricals as frequency-rank codes)"));
      }
      if (!rep_model.empty()) {
        const std::string model_path = run.input(rep_model, "");
        const BilevelModel model = io::bilevel_from_json(io::read_json_file(model_path));
        if (!model.classifier.trees.empty()) {
          run.write_text("report/classifier_tree0.dot",
                         to_dot(model.classifier.trees.front(), model.classifier.bin_map,
                                model.classifier.feature_names, dot_depth));
        }
        if (!model.long_regressor.trees.empty()) {
          run.write_text("report/long_regressor_tree0.dot",
                         to_dot(model.long_regressor.trees.front(), model.long_regressor.bin_map,
                                model.long_regressor.feature_names, dot_depth));
        }
      }
      const SummaryStats after = summary_stats(trimmed);
      run.summary = {{"raw_rows", raw.size()},  {"trimmed_rows", trimmed.size()}, {"trimmed_max", after.max},
                     {"trimmed_min", after.min}, {"trimmed_mean", after.mean},    {"trimmed_std", after.std},
                     {"q1", five.q1},            {"q3", five.q3}};
    }
    run.finish();
    return 0;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n' << sub->help();
    return 2;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) {
      err << "error: " << e.what() << '\n';
      return 2;
    }
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace duraflow::cli
