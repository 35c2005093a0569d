#include "duraflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string_view>

#include "duraflow/csv.hpp"
#include "duraflow/rng.hpp"

namespace duraflow {
namespace {

constexpr std::string_view kExtraColumns[] = {
    "Start_Lat", "Start_Lng", "End_Lat", "End_Lng", "Description", "Number", "Street", "Side",
    "City", "County", "Zipcode", "Country", "Timezone", "Airport_Code", "Weather_Timestamp",
};

constexpr std::string_view kDirections[] = {"N", "NNE", "NE", "ENE", "E", "ESE", "SE", "SSE", "S",
                                            "SSW", "SW", "WSW", "W", "WNW", "NW", "NNW", "CALM", "VAR"};

struct Weather {
  std::string_view name;
  double weight;
  bool severe;
};

constexpr Weather kWeather[] = {
    {"Clear", 0.30, false},    {"Fair", 0.18, false},       {"Partly Cloudy", 0.12, false},
    {"Mostly Cloudy", 0.10, false}, {"Overcast", 0.08, false}, {"Light Rain", 0.07, false},
    {"Rain", 0.04, true},      {"Heavy Rain", 0.03, true},  {"Fog", 0.03, true},
    {"Thunderstorm", 0.03, true}, {"Light Snow", 0.02, true},
};

constexpr std::string_view kCities[] = {"Houston", "Dallas", "Austin", "San Antonio", "El Paso", "Fort Worth"};

// Per-POI prevalence; Turning_Loop never fires, as in the public data.
constexpr double kPoiRate[kPoiCount] = {0.02, 0.005, 0.12, 0.01, 0.10, 0.003, 0.015,
                                        0.001, 0.03, 0.04, 0.002, 0.20, 0.0};

std::string fixed(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double round_to(double v, int digits) {
  const double scale = std::pow(10.0, digits);
  return std::round(v * scale) / scale;
}

std::string_view pick_weather(Rng& rng) {
  double u = rng.uniform();
  for (const auto& w : kWeather) {
    if (u < w.weight) return w.name;
    u -= w.weight;
  }
  return kWeather[0].name;
}

bool is_severe(std::string_view name) {
  for (const auto& w : kWeather) {
    if (w.name == name) return w.severe;
  }
  return false;
}

template <typename T>
std::optional<T> maybe(Rng& rng, double missing_rate, T value) {
  if (rng.uniform() < missing_rate) return std::nullopt;
  return value;
}

}  // namespace

RecordBatch synthesize_records(std::size_t rows, std::uint64_t seed) {
  RecordBatch batch;
  batch.header = accident_table_columns();
  batch.header.emplace_back(kSourceColumn);
  for (auto name : kExtraColumns) batch.extra_columns.emplace_back(name);
  batch.data_rows = rows;
  batch.records.reserve(rows);

  Rng rng(seed);
  const std::int64_t first = Timestamp::from_civil(2016, 2, 1).micros() / 1000000;
  const std::int64_t last = Timestamp::from_civil(2021, 12, 1).micros() / 1000000;
  const std::int64_t early = Timestamp::from_civil(2015, 1, 1).micros() / 1000000;

  for (std::size_t i = 0; i < rows; ++i) {
    RawAccidentRecord r;
    r.id = "S-" + std::to_string(i + 1);

    // Weather and road state.
    const double temperature = round_to(std::clamp(68.0 + 16.0 * rng.normal(), -5.0, 110.0), 1);
    const double wind_speed = round_to(std::max(0.0, 8.0 + 5.0 * rng.normal()), 1);
    const double wind_chill =
        round_to(temperature < 50.0 ? temperature - 0.7 * wind_speed : temperature, 1);
    const std::string_view weather = pick_weather(rng);
    const bool severe = is_severe(weather);
    const double precipitation =
        severe ? round_to(0.05 + 0.4 * rng.uniform(), 2) : (rng.uniform() < 0.1 ? round_to(0.04 * rng.uniform(), 2) : 0.0);
    const double humidity = round_to(std::clamp(60.0 + 20.0 * rng.normal() + (severe ? 20.0 : 0.0), 5.0, 100.0), 0);
    const double pressure = round_to(29.9 + 0.25 * rng.normal(), 2);
    const double visibility = round_to(severe ? 1.0 + 4.0 * rng.uniform() : std::min(10.0, 6.0 + 5.0 * rng.uniform()), 1);
    const double distance = round_to(std::exp(-1.5 + 1.3 * rng.normal()), 3);
    const auto direction = kDirections[rng.below(std::size(kDirections))];

    std::array<bool, kPoiCount> poi{};
    for (std::size_t k = 0; k < kPoiCount; ++k) poi[k] = rng.uniform() < kPoiRate[k];
    const bool night = rng.uniform() < 0.3;
    const bool junction = poi[4];
    const bool signal = poi[11];

    // The regime is a fixed function of the features above.
    const bool long_regime = precipitation > 0.05 || (junction && !signal) || (wind_chill < 40.0 && night) ||
                             distance > 1.5;

    // Within a regime the features move the median in opposite directions.
    // The median is kept clear of 164 and noise is redrawn until the duration
    // lands on its regime's side.
    double minutes;
    if (long_regime) {
      const double shift = 0.5 * std::tanh(distance) - 0.4 * (temperature - 68.0) / 16.0 +
                           0.3 * (humidity - 60.0) / 20.0 - 0.25 * (pressure - 29.9) / 0.25 +
                           0.15 * (wind_speed - 8.0) / 5.0 + (junction ? 0.1 : 0.0);
      const double median = std::max(190.0, 230.0 * std::exp(shift));
      do {
        minutes = median * std::exp(0.06 * rng.normal());
      } while (minutes < 170.0);
    } else {
      const double shift = -0.4 * std::tanh(distance) + 0.35 * (temperature - 68.0) / 16.0 -
                           0.3 * (humidity - 60.0) / 20.0 + 0.25 * (pressure - 29.9) / 0.25 +
                           0.15 * (visibility - 7.0) / 3.0 + (signal ? -0.12 : 0.0);
      const double median = std::min(140.0, 95.0 * std::exp(shift));
      do {
        minutes = median * std::exp(0.08 * rng.normal());
      } while (minutes > 158.0);
    }
    const auto seconds = static_cast<std::int64_t>(std::llround(std::max(minutes, 1.0) * 60.0));

    // Population membership: most rows pass the default filter.
    const double u = rng.uniform();
    std::int64_t start = first + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(last - first)));
    std::string state = "TX";
    std::string source = "Source1";
    if (u < 0.04) {
      state = rng.uniform() < 0.5 ? "CA" : "FL";
    } else if (u < 0.07) {
      source = rng.uniform() < 0.5 ? "Source2" : "Source3";
    } else if (u < 0.10) {
      start = early + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(first - early)));
    }
    r.start_time = Timestamp::from_micros(start * 1000000);
    r.end_time = Timestamp::from_micros((start + seconds) * 1000000);
    r.severity = 1 + static_cast<int>(rng.below(4));
    r.state = state;
    r.source_tag = source;

    r.distance_mi = maybe(rng, 0.005, distance);
    r.temperature_f = maybe(rng, 0.005, temperature);
    r.wind_chill_f = maybe(rng, 0.005, wind_chill);
    r.humidity_pct = maybe(rng, 0.005, humidity);
    r.pressure_in = maybe(rng, 0.005, pressure);
    r.visibility_mi = maybe(rng, 0.005, visibility);
    r.wind_direction = maybe(rng, 0.005, std::string(direction));
    r.wind_speed_mph = maybe(rng, 0.005, wind_speed);
    r.precipitation_in = maybe(rng, 0.005, precipitation);
    r.weather_condition = maybe(rng, 0.005, std::string(weather));
    for (std::size_t k = 0; k < kPoiCount; ++k) r.poi[k] = poi[k];
    for (std::size_t k = 0; k < kTwilightCount; ++k) {
      // Twilight phases agree with the sunrise/sunset flag most of the time.
      const bool dark = k == 0 ? night : (rng.uniform() < 0.9 ? night : !night);
      r.twilight[k] = maybe(rng, 0.005, std::string(dark ? "Night" : "Day"));
    }

    const double lat = 29.0 + 4.0 * rng.uniform();
    const double lng = -100.0 + 6.0 * rng.uniform();
    const auto city = kCities[rng.below(std::size(kCities))];
    r.extra = {
        fixed(lat, 6),
        fixed(lng, 6),
        fixed(lat + 0.001, 6),
        fixed(lng + 0.001, 6),
        "Synthetic incident on I-" + std::to_string(10 + 5 * rng.below(8)) + ", " + std::string(city),
        std::to_string(100 + rng.below(9000)),
        "I-" + std::to_string(10 + 5 * rng.below(8)),
        rng.uniform() < 0.5 ? "R" : "L",
        std::string(city),
        std::string(city) + " County",
        std::to_string(75000 + rng.below(4000)),
        "US",
        "US/Central",
        "K" + std::string(city.substr(0, 3)),
        r.start_time.to_string(),
    };
    batch.records.push_back(std::move(r));
  }
  return batch;
}

}  // namespace duraflow
