#pragma once

#include <filesystem>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "duraflow/csv.hpp"
#include "duraflow/ingest.hpp"
#include "duraflow/preprocess.hpp"

namespace testutil {

using Cells = std::map<std::string, std::string>;

// A CSV under the full documented header; unspecified cells are empty.
inline std::string accident_csv(const std::vector<Cells>& rows, bool with_source = true) {
  std::vector<std::string> header = duraflow::accident_table_columns();
  if (with_source) header.emplace_back(duraflow::kSourceColumn);
  std::ostringstream out;
  duraflow::csv::write_row(out, header);
  for (const auto& row : rows) {
    std::vector<std::string> fields;
    for (const auto& name : header) {
      auto it = row.find(name);
      fields.push_back(it == row.end() ? "" : it->second);
    }
    duraflow::csv::write_row(out, fields);
  }
  return out.str();
}

inline Cells basic_row(const std::string& id, const std::string& start, const std::string& end,
                       const std::string& state = "TX", const std::string& source = "Source1") {
  return {{"ID", id}, {"Start_Time", start}, {"End_Time", end}, {"State", state}, {"Source", source}};
}

inline duraflow::RawAccidentRecord record(const std::string& id, int y, unsigned m, unsigned d, double minutes,
                                          const std::string& state = "TX") {
  duraflow::RawAccidentRecord r;
  r.id = id;
  r.start_time = duraflow::Timestamp::from_civil(y, m, d, 8);
  r.end_time = duraflow::Timestamp::from_micros(r.start_time.micros() +
                                                static_cast<std::int64_t>(minutes * 60e6));
  r.state = state;
  r.source_tag = "Source1";
  return r;
}

// Scratch directory removed on scope exit.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() / ("duraflow_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

// A small encoded dataset with explicit columns; all features numeric.
inline duraflow::EncodedDataset numeric_dataset(const std::vector<std::vector<double>>& rows,
                                                const std::vector<double>& durations, double threshold = 164.0) {
  duraflow::EncodedDataset ds;
  const std::size_t d = rows.empty() ? 0 : rows[0].size();
  for (std::size_t j = 0; j < d; ++j) {
    ds.schema.columns.push_back({"f" + std::to_string(j), duraflow::ColumnKind::numeric, std::nullopt});
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ds.values.insert(ds.values.end(), rows[i].begin(), rows[i].end());
    ds.durations.push_back(durations[i]);
    ds.labels.push_back(duraflow::label_duration(durations[i], threshold));
    ds.ids.push_back("r" + std::to_string(i));
  }
  return ds;
}

}  // namespace testutil
