#include "doctest.h"

#include <sstream>

#include "duraflow/error.hpp"
#include "duraflow/ingest.hpp"
#include "duraflow/rng.hpp"
#include "duraflow/synth.hpp"
#include "helpers.hpp"

using namespace duraflow;
using testutil::basic_row;

TEST_SUITE("ingest") {
  TEST_CASE("documented header has 47 columns and 13 POI flags") {
    CHECK(accident_table_columns().size() == 47);
    CHECK(poi_columns().back() == "Turning_Loop");
    CHECK(twilight_columns().front() == "Sunrise_Sunset");
  }

  TEST_CASE("row missing End_Time becomes a diagnostic") {
    auto r2 = basic_row("A-2", "2017-03-01 09:00:00", "");
    std::istringstream in(testutil::accident_csv({basic_row("A-1", "2017-03-01 08:00:00", "2017-03-01 09:00:00"), r2,
                                                  basic_row("A-3", "2017-03-02 08:00:00", "2017-03-02 08:45:00")}));
    const auto batch = parse_records(in, HeaderPolicy::strict);
    CHECK(batch.records.size() == 2);
    REQUIRE(batch.diagnostics.size() == 1);
    CHECK(batch.diagnostics[0].line == 3);
    CHECK(batch.diagnostics[0].reason.find("End_Time") != std::string::npos);
    CHECK(batch.data_rows == 3);
  }

  TEST_CASE("strict header without ID is rejected") {
    std::string text = testutil::accident_csv({});
    text.replace(0, 2, "Ident");
    std::istringstream in(text);
    try {
      parse_records(in, HeaderPolicy::strict);
      FAIL("expected MissingHeader");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingHeader);
    }
  }

  TEST_CASE("empty input has no header") {
    std::istringstream in("");
    CHECK_THROWS_AS(parse_records(in), Error);
  }

  TEST_CASE("empty Temperature(F) is absent, others parse") {
    auto row = basic_row("A-1", "2017-03-01 08:00:00", "2017-03-01 09:00:00");
    row["Temperature(F)"] = "";
    row["Humidity(%)"] = "81";
    row["Junction"] = "True";
    row["Sunrise_Sunset"] = "Night";
    std::istringstream in(testutil::accident_csv({row}));
    const auto batch = parse_records(in);
    REQUIRE(batch.records.size() == 1);
    const auto& r = batch.records[0];
    CHECK_FALSE(r.temperature_f.has_value());
    CHECK(r.humidity_pct == 81.0);
    CHECK(r.poi[4] == true);
    CHECK(r.twilight[0] == "Night");
  }

  TEST_CASE("column order in the file does not matter") {
    std::istringstream in(
        "End_Time,State,ID,Start_Time\n"
        "2017-01-01 10:00:00,TX,X,2017-01-01 09:00:00\n");
    const auto batch = parse_records(in, HeaderPolicy::lenient);
    REQUIRE(batch.records.size() == 1);
    CHECK(batch.records[0].id == "X");
    CHECK(batch.records[0].end_time.to_string() == "2017-01-01 10:00:00");
  }

  TEST_CASE("lenient header matching trims and ignores case") {
    std::istringstream in(" id ,START_TIME,end_time, temperature(f)\nX,2017-01-01 09:00:00,2017-01-01 10:00:00,55\n");
    const auto batch = parse_records(in, HeaderPolicy::lenient);
    REQUIRE(batch.records.size() == 1);
    CHECK(batch.records[0].temperature_f == 55.0);
    CHECK(batch.header[0] == "ID");
    std::istringstream strict_in(" id ,START_TIME,end_time\nX,2017-01-01 09:00:00,2017-01-01 10:00:00\n");
    CHECK_THROWS_AS(parse_records(strict_in, HeaderPolicy::strict), Error);
  }

  TEST_CASE("duplicate ids and bad timestamps are diagnostics") {
    std::istringstream in(testutil::accident_csv({basic_row("A", "2017-03-01 08:00:00", "2017-03-01 09:00:00"),
                                                  basic_row("A", "2017-03-01 08:00:00", "2017-03-01 09:00:00"),
                                                  basic_row("B", "yesterday", "2017-03-01 09:00:00"),
                                                  basic_row("", "2017-03-01 08:00:00", "2017-03-01 09:00:00")}));
    const auto batch = parse_records(in);
    CHECK(batch.records.size() == 1);
    CHECK(batch.diagnostics.size() == 3);
  }

  TEST_CASE("filter keeps TX, the configured source and the date window") {
    const auto tx = testutil::record("1", 2017, 5, 1, 30);
    const auto ca = testutil::record("2", 2017, 5, 1, 30, "CA");
    const auto old = testutil::record("3", 2015, 12, 1, 30);
    auto other_source = testutil::record("4", 2017, 5, 1, 30);
    other_source.source_tag = "Source2";
    const std::vector<RawAccidentRecord> all{tx, ca, old, other_source};
    const auto kept = filter_records(all, FilterSpec{});
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].id == "1");

    FilterSpec any_source;
    any_source.source_tag = "";
    CHECK(filter_records(all, any_source).size() == 2);
  }

  TEST_CASE("filter window bounds are inclusive") {
    auto first = testutil::record("a", 2016, 2, 1, 5);
    first.start_time = Timestamp::from_civil(2016, 2, 1);
    auto last = testutil::record("b", 2021, 12, 31, 5);
    last.start_time = Timestamp::from_civil(2021, 12, 31, 23, 59, 59);
    auto after = testutil::record("c", 2022, 1, 1, 5);
    after.start_time = Timestamp::from_civil(2022, 1, 1);
    const std::vector<RawAccidentRecord> all{first, last, after};
    CHECK(filter_records(all, FilterSpec{}).size() == 2);
  }

  TEST_CASE("property: filter is idempotent and order preserving") {
    const auto batch = synthesize_records(3000, 11);
    const auto once = filter_records(batch.records, FilterSpec{});
    const auto twice = filter_records(once, FilterSpec{});
    CHECK(once == twice);
    std::size_t pos = 0;
    for (const auto& r : batch.records) {
      if (pos < once.size() && r.id == once[pos].id) ++pos;
    }
    CHECK(pos == once.size());
  }

  TEST_CASE("property: diagnostics plus records equal data rows") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<testutil::Cells> rows;
      const int n = 1 + static_cast<int>(rng.below(30));
      for (int i = 0; i < n; ++i) {
        auto row = basic_row("R" + std::to_string(rng.below(40)), "2018-06-01 10:00:00", "2018-06-01 11:00:00");
        if (rng.uniform() < 0.2) row["End_Time"] = "bad";
        rows.push_back(row);
      }
      std::istringstream in(testutil::accident_csv(rows));
      const auto batch = parse_records(in);
      CHECK(batch.records.size() + batch.diagnostics.size() == batch.data_rows);
      CHECK(batch.data_rows == static_cast<std::size_t>(n));
    }
  }

  TEST_CASE("property: parse, write, parse round-trips synthetic tables") {
    const auto batch = synthesize_records(2000, 3);
    std::ostringstream first;
    write_records(first, batch);
    std::istringstream in(first.str());
    const auto parsed = parse_records(in, HeaderPolicy::strict);
    CHECK(parsed.diagnostics.empty());
    CHECK(parsed.records == batch.records);
    std::ostringstream second;
    write_records(second, parsed);
    CHECK(second.str() == first.str());
  }

  TEST_CASE("round trip preserves verbatim numeric text forms") {
    auto row = basic_row("A-1", "2017-03-01 08:00:00.250000", "2017-03-01 09:00:00");
    row["Temperature(F)"] = "55.4";
    row["Pressure(in)"] = "29.92";
    row["Description"] = "Crash, \"two\" lanes";
    std::istringstream in(testutil::accident_csv({row}));
    const auto parsed = parse_records(in);
    std::ostringstream out;
    write_records(out, parsed);
    std::istringstream again(out.str());
    const auto reparsed = parse_records(again);
    CHECK(reparsed.records == parsed.records);
    CHECK(out.str().find("55.4") != std::string::npos);
    CHECK(out.str().find("2017-03-01 08:00:00.25") != std::string::npos);
  }
}
