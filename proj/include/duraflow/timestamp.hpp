#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace duraflow {

// Naive local wall-clock time with microsecond resolution. No time zone is
// attached; differences are plain arithmetic on the civil calendar.
class Timestamp {
 public:
  constexpr Timestamp() = default;

  static Timestamp from_micros(std::int64_t micros) {
    Timestamp t;
    t.micros_ = micros;
    return t;
  }
  static Timestamp from_civil(int year, unsigned month, unsigned day, int hour = 0,
                              int minute = 0, int second = 0, int micros = 0);

  // Accepts "YYYY-MM-DD HH:MM:SS" with optional ".fraction" (any number of
  // digits; truncated to microseconds) and the date-only form "YYYY-MM-DD".
  static std::optional<Timestamp> parse(std::string_view text);

  // "YYYY-MM-DD HH:MM:SS", with ".ffffff" appended only when the fraction is nonzero.
  std::string to_string() const;

  std::int64_t micros() const { return micros_; }

  auto operator<=>(const Timestamp&) const = default;

 private:
  std::int64_t micros_ = 0;  // since 1970-01-01 00:00:00 on the civil calendar
};

}  // namespace duraflow
