#pragma once

#include <array>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "duraflow/timestamp.hpp"

namespace duraflow {

// The 47 column names of the accident table, in their documented order.
const std::vector<std::string>& accident_table_columns();

// Source feed column. Not part of the documented table, but present in the
// public exports and required to select the MapQuest feed.
inline constexpr std::string_view kSourceColumn = "Source";

inline constexpr std::size_t kPoiCount = 13;
inline constexpr std::size_t kTwilightCount = 4;

// Amenity ... Traffic_Signal, Turning_Loop.
const std::array<std::string_view, kPoiCount>& poi_columns();
// Sunrise_Sunset, Civil_Twilight, Nautical_Twilight, Astronomical_Twilight.
const std::array<std::string_view, kTwilightCount>& twilight_columns();

struct RawAccidentRecord {
  std::string id;
  std::optional<int> severity;
  Timestamp start_time;
  Timestamp end_time;
  std::optional<std::string> state;
  std::optional<std::string> source_tag;

  std::optional<double> distance_mi;
  std::optional<double> temperature_f;
  std::optional<double> wind_chill_f;
  std::optional<double> humidity_pct;
  std::optional<double> pressure_in;
  std::optional<double> visibility_mi;
  std::optional<std::string> wind_direction;
  std::optional<double> wind_speed_mph;
  std::optional<double> precipitation_in;
  std::optional<std::string> weather_condition;
  std::array<std::optional<bool>, kPoiCount> poi{};
  std::array<std::optional<std::string>, kTwilightCount> twilight{};

  // Columns not modeled (coordinates, address, description, ...), aligned with
  // RecordBatch::extra_columns. Empty string means absent.
  std::vector<std::string> extra;

  bool operator==(const RawAccidentRecord&) const = default;
};

enum class HeaderPolicy { strict, lenient };

struct RowDiagnostic {
  std::size_t line = 0;
  std::string reason;
};

struct RecordBatch {
  std::vector<std::string> header;         // file order; lenient parsing canonicalizes known names
  std::vector<std::string> extra_columns;  // header entries kept verbatim in RawAccidentRecord::extra
  std::vector<RawAccidentRecord> records;
  std::vector<RowDiagnostic> diagnostics;
  std::size_t data_rows = 0;
};

// Strict: every documented column must be present under its exact name.
// Lenient: names are trimmed and compared case-insensitively; only ID,
// Start_Time and End_Time are required. Throws Error(MissingHeader).
RecordBatch parse_records(std::istream& in, HeaderPolicy policy = HeaderPolicy::strict);
RecordBatch parse_records_file(const std::string& path, HeaderPolicy policy = HeaderPolicy::strict);

// Emits the batch under its original header.
void write_records(std::ostream& out, const RecordBatch& batch);

struct FilterSpec {
  std::string state_code = "TX";
  // Empty matches every source.
  std::string source_tag = "Source1";
  Timestamp date_min = Timestamp::from_civil(2016, 2, 1);
  Timestamp date_max = Timestamp::from_civil(2021, 12, 31, 23, 59, 59, 999999);
};

std::vector<RawAccidentRecord> filter_records(std::span<const RawAccidentRecord> records,
                                              const FilterSpec& spec);

}  // namespace duraflow
