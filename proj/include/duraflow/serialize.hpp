#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>

#include "json.hpp"

#include "duraflow/bilevel.hpp"
#include "duraflow/explain.hpp"
#include "duraflow/forest.hpp"
#include "duraflow/gbdt.hpp"
#include "duraflow/metrics.hpp"
#include "duraflow/preprocess.hpp"
#include "duraflow/tree.hpp"

// JSON documents exchanged between the subcommands. Every top-level document
// carries "format_version"; readers reject versions they do not know.
namespace duraflow::io {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

Json to_json(const Tree& tree);
Tree tree_from_json(const Json& doc);

Json to_json(const BinMap& bins);
BinMap bin_map_from_json(const Json& doc);

Json to_json(const ForestModel& model);
ForestModel forest_from_json(const Json& doc);

Json to_json(const GbdtModel& model);
GbdtModel gbdt_from_json(const Json& doc);

Json to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const Json& doc);

Json to_json(const PreprocessArtifacts& artifacts);
PreprocessArtifacts artifacts_from_json(const Json& doc);

Json to_json(const BilevelModel& model);
BilevelModel bilevel_from_json(const Json& doc);

Json to_json(const ClassificationReport& report);
Json to_json(const BilevelEvaluation& evaluation);
Json to_json(const ShapSummary& summary);

// Aligned plain-text rendering of the classification, per-branch and combined
// tables.
std::string evaluation_text(const BilevelEvaluation& evaluation);

// Encoded CSV: id, one column per schema feature, duration_minutes, label.
void write_encoded_csv(std::ostream& out, const EncodedDataset& data);
// The header must list the schema's features in order (SchemaMismatch
// otherwise). duration_minutes and label columns are optional.
EncodedDataset read_encoded_csv(std::istream& in, const FeatureSchema& schema);

Json read_json_file(const std::filesystem::path& path);
// Pretty-printed with two-space indent and a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& doc);

}  // namespace duraflow::io
