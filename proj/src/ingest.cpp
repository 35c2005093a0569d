#include "duraflow/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "duraflow/csv.hpp"
#include "duraflow/error.hpp"

namespace duraflow {
namespace {

using Record = RawAccidentRecord;

struct NumberField {
  std::string_view name;
  std::optional<double> Record::*member;
};

struct TextField {
  std::string_view name;
  std::optional<std::string> Record::*member;
};

constexpr NumberField kNumberFields[] = {
    {"Distance(mi)", &Record::distance_mi},        {"Temperature(F)", &Record::temperature_f},
    {"Wind_Chill(F)", &Record::wind_chill_f},      {"Humidity(%)", &Record::humidity_pct},
    {"Pressure(in)", &Record::pressure_in},        {"Visibility(mi)", &Record::visibility_mi},
    {"Wind_Speed(mph)", &Record::wind_speed_mph},  {"Precipitation(in)", &Record::precipitation_in},
};

constexpr TextField kTextFields[] = {
    {"State", &Record::state},
    {"Source", &Record::source_tag},
    {"Wind_Direction", &Record::wind_direction},
    {"Weather_Condition", &Record::weather_condition},
};

enum class FieldKind { id, severity, start_time, end_time, number, text, poi, twilight, extra };

struct FieldRef {
  FieldKind kind = FieldKind::extra;
  std::size_t index = 0;
};

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::optional<double> parse_number(std::string_view text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  double value = 0.0;
  const char* first = t.data();
  if (*first == '+') ++first;
  auto res = std::from_chars(first, t.data() + t.size(), value);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) return std::nullopt;
  return value;
}

std::optional<bool> parse_bool(std::string_view text) {
  const std::string t = lower(trim(text));
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  return std::nullopt;
}

std::optional<std::string> optional_text(std::string_view text) {
  if (text.empty()) return std::nullopt;
  return std::string(text);
}

FieldRef bind_column(std::string_view canonical) {
  if (canonical == "ID") return {FieldKind::id, 0};
  if (canonical == "Severity") return {FieldKind::severity, 0};
  if (canonical == "Start_Time") return {FieldKind::start_time, 0};
  if (canonical == "End_Time") return {FieldKind::end_time, 0};
  for (std::size_t i = 0; i < std::size(kNumberFields); ++i) {
    if (canonical == kNumberFields[i].name) return {FieldKind::number, i};
  }
  for (std::size_t i = 0; i < std::size(kTextFields); ++i) {
    if (canonical == kTextFields[i].name) return {FieldKind::text, i};
  }
  for (std::size_t i = 0; i < kPoiCount; ++i) {
    if (canonical == poi_columns()[i]) return {FieldKind::poi, i};
  }
  for (std::size_t i = 0; i < kTwilightCount; ++i) {
    if (canonical == twilight_columns()[i]) return {FieldKind::twilight, i};
  }
  return {FieldKind::extra, 0};
}

// Returns false when a mandatory field cannot be parsed.
bool assign(Record& rec, const FieldRef& ref, const std::string& text, std::string& reason) {
  switch (ref.kind) {
    case FieldKind::id:
      rec.id = trim(text);
      if (rec.id.empty()) {
        reason = "empty ID";
        return false;
      }
      return true;
    case FieldKind::severity: {
      const auto v = parse_number(text);
      if (v && *v == static_cast<int>(*v)) rec.severity = static_cast<int>(*v);
      return true;
    }
    case FieldKind::start_time:
    case FieldKind::end_time: {
      const auto ts = Timestamp::parse(text);
      const bool start = ref.kind == FieldKind::start_time;
      if (!ts) {
        reason = std::string(start ? "Start_Time" : "End_Time") +
                 (trim(text).empty() ? " missing" : " unparseable: '" + text + "'");
        return false;
      }
      (start ? rec.start_time : rec.end_time) = *ts;
      return true;
    }
    case FieldKind::number:
      rec.*(kNumberFields[ref.index].member) = parse_number(text);
      return true;
    case FieldKind::text:
      rec.*(kTextFields[ref.index].member) = optional_text(text);
      return true;
    case FieldKind::poi:
      rec.poi[ref.index] = parse_bool(text);
      return true;
    case FieldKind::twilight:
      rec.twilight[ref.index] = optional_text(text);
      return true;
    case FieldKind::extra:
      rec.extra[ref.index] = text;
      return true;
  }
  return true;
}

std::string render(const Record& rec, const FieldRef& ref) {
  switch (ref.kind) {
    case FieldKind::id: return rec.id;
    case FieldKind::severity: return rec.severity ? std::to_string(*rec.severity) : std::string();
    case FieldKind::start_time: return rec.start_time.to_string();
    case FieldKind::end_time: return rec.end_time.to_string();
    case FieldKind::number: {
      const auto& v = rec.*(kNumberFields[ref.index].member);
      return v ? csv::format_double(*v) : std::string();
    }
    case FieldKind::text: return (rec.*(kTextFields[ref.index].member)).value_or("");
    case FieldKind::poi: {
      const auto& v = rec.poi[ref.index];
      return v ? (*v ? "True" : "False") : "";
    }
    case FieldKind::twilight: return rec.twilight[ref.index].value_or("");
    case FieldKind::extra: return ref.index < rec.extra.size() ? rec.extra[ref.index] : "";
  }
  return {};
}

struct HeaderBinding {
  std::vector<FieldRef> refs;  // one per header column
  std::vector<std::string> extra_columns;
};

HeaderBinding bind_header(std::vector<std::string>& header, HeaderPolicy policy) {
  // canonical name lookup for lenient matching
  std::unordered_map<std::string, std::string> canonical_by_key;
  for (const auto& name : accident_table_columns()) canonical_by_key.emplace(lower(name), name);
  canonical_by_key.emplace(lower(kSourceColumn), std::string(kSourceColumn));

  HeaderBinding binding;
  std::unordered_set<std::string> present;
  for (auto& name : header) {
    if (policy == HeaderPolicy::lenient) {
      auto it = canonical_by_key.find(lower(trim(name)));
      if (it != canonical_by_key.end()) name = it->second;
    }
    FieldRef ref = bind_column(name);
    if (!present.insert(name).second) ref = {FieldKind::extra, 0};  // duplicate: keep verbatim
    if (ref.kind == FieldKind::extra) {
      ref.index = binding.extra_columns.size();
      binding.extra_columns.push_back(name);
    }
    binding.refs.push_back(ref);
  }

  const std::vector<std::string> required =
      policy == HeaderPolicy::strict ? accident_table_columns()
                                     : std::vector<std::string>{"ID", "Start_Time", "End_Time"};
  for (const auto& name : required) {
    if (!present.count(name)) {
      throw Error(ErrorCode::MissingHeader, "required column '" + name + "' absent");
    }
  }
  return binding;
}

}  // namespace

const std::vector<std::string>& accident_table_columns() {
  static const std::vector<std::string> columns = {
      "ID",           "Severity",        "Start_Time",       "End_Time",
      "Start_Lat",    "Start_Lng",       "End_Lat",          "End_Lng",
      "Distance(mi)", "Description",     "Number",           "Street",
      "Side",         "City",            "County",           "State",
      "Zipcode",      "Country",         "Timezone",         "Airport_Code",
      "Weather_Timestamp", "Temperature(F)", "Wind_Chill(F)", "Humidity(%)",
      "Pressure(in)", "Visibility(mi)",  "Wind_Direction",   "Wind_Speed(mph)",
      "Precipitation(in)", "Weather_Condition", "Amenity",  "Bump",
      "Crossing",     "Give_Way",        "Junction",         "No_Exit",
      "Railway",      "Roundabout",      "Station",          "Stop",
      "Traffic_Calming", "Traffic_Signal", "Turning_Loop",   "Sunrise_Sunset",
      "Civil_Twilight", "Nautical_Twilight", "Astronomical_Twilight",
  };
  return columns;
}

const std::array<std::string_view, kPoiCount>& poi_columns() {
  static constexpr std::array<std::string_view, kPoiCount> names = {
      "Amenity", "Bump",  "Crossing",        "Give_Way",       "Junction",    "No_Exit", "Railway",
      "Roundabout", "Station", "Stop", "Traffic_Calming", "Traffic_Signal", "Turning_Loop"};
  return names;
}

const std::array<std::string_view, kTwilightCount>& twilight_columns() {
  static constexpr std::array<std::string_view, kTwilightCount> names = {
      "Sunrise_Sunset", "Civil_Twilight", "Nautical_Twilight", "Astronomical_Twilight"};
  return names;
}

RecordBatch parse_records(std::istream& in, HeaderPolicy policy) {
  csv::Reader reader(in);
  auto header_row = reader.next();
  if (!header_row) throw Error(ErrorCode::MissingHeader, "input has no header row");

  RecordBatch batch;
  batch.header = std::move(header_row->fields);
  if (!batch.header.empty() && batch.header.front().starts_with("\xEF\xBB\xBF")) {
    batch.header.front().erase(0, 3);  // UTF-8 BOM
  }
  HeaderBinding binding = bind_header(batch.header, policy);
  batch.extra_columns = binding.extra_columns;

  std::unordered_set<std::string> ids;
  while (auto row = reader.next()) {
    ++batch.data_rows;
    if (row->fields.size() != batch.header.size()) {
      batch.diagnostics.push_back({row->line, "expected " + std::to_string(batch.header.size()) +
                                                  " fields, found " +
                                                  std::to_string(row->fields.size())});
      continue;
    }
    Record rec;
    rec.extra.resize(batch.extra_columns.size());
    std::string reason;
    bool ok = true;
    for (std::size_t c = 0; c < binding.refs.size() && ok; ++c) {
      ok = assign(rec, binding.refs[c], row->fields[c], reason);
    }
    if (ok && !ids.insert(rec.id).second) {
      ok = false;
      reason = "duplicate ID '" + rec.id + "'";
    }
    if (!ok) {
      batch.diagnostics.push_back({row->line, reason});
      continue;
    }
    batch.records.push_back(std::move(rec));
  }
  return batch;
}

RecordBatch parse_records_file(const std::string& path, HeaderPolicy policy) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return parse_records(in, policy);
}

void write_records(std::ostream& out, const RecordBatch& batch) {
  csv::write_row(out, batch.header);
  // Parsing stored canonical names for bound columns, so binding again by name
  // reproduces the parse-time layout.
  std::vector<FieldRef> refs;
  std::size_t extra = 0;
  std::unordered_set<std::string> seen;
  for (const auto& name : batch.header) {
    FieldRef ref = bind_column(name);
    if (!seen.insert(name).second) ref = {FieldKind::extra, 0};
    if (ref.kind == FieldKind::extra) ref.index = extra++;
    refs.push_back(ref);
  }
  std::vector<std::string> fields(refs.size());
  for (const auto& rec : batch.records) {
    for (std::size_t c = 0; c < refs.size(); ++c) fields[c] = render(rec, refs[c]);
    csv::write_row(out, fields);
  }
}

std::vector<RawAccidentRecord> filter_records(std::span<const RawAccidentRecord> records,
                                              const FilterSpec& spec) {
  if (spec.date_max < spec.date_min) {
    throw Error(ErrorCode::InvalidArgument, "filter date_min is after date_max");
  }
  std::vector<RawAccidentRecord> kept;
  for (const auto& rec : records) {
    if (rec.state.value_or("") != spec.state_code) continue;
    if (!spec.source_tag.empty() && rec.source_tag.value_or("") != spec.source_tag) continue;
    if (rec.start_time < spec.date_min || spec.date_max < rec.start_time) continue;
    kept.push_back(rec);
  }
  return kept;
}

}  // namespace duraflow
