#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "json.hpp"

#include "duraflow/bilevel.hpp"
#include "duraflow/ingest.hpp"
#include "duraflow/preprocess.hpp"

namespace duraflow {

// Effective settings of one CLI invocation. Loaded from JSON, overridden by
// flags, and echoed into every manifest with all defaults filled in.
struct RunConfig {
  std::string workdir = ".";
  HeaderPolicy header_policy = HeaderPolicy::strict;
  FilterSpec filter;
  PreprocessConfig preprocess;
  PipelineConfig pipeline;
  std::size_t shap_sample_cap = 10000;
  std::uint64_t shap_seed = 7;
  std::size_t series_first_n = 100;
  bool write_svg = true;
  int threads = 1;
};

nlohmann::ordered_json to_json(const RunConfig& config);

// Keys absent from `doc` keep the values already in `base`. Unknown keys are
// rejected with InvalidArgument.
RunConfig run_config_from_json(const nlohmann::ordered_json& doc, RunConfig base = {});

}  // namespace duraflow
