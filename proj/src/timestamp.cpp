#include "duraflow/timestamp.hpp"

#include <chrono>
#include <cstdio>

namespace duraflow {
namespace {

constexpr std::int64_t kMicrosPerSecond = 1'000'000;
constexpr std::int64_t kSecondsPerDay = 86'400;

bool read_digits(std::string_view text, std::size_t pos, std::size_t count, int& out) {
  if (pos + count > text.size()) return false;
  int value = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const char c = text[pos + i];
    if (c < '0' || c > '9') return false;
    value = value * 10 + (c - '0');
  }
  out = value;
  return true;
}

}  // namespace

Timestamp Timestamp::from_civil(int year, unsigned month, unsigned day, int hour, int minute,
                                int second, int micros) {
  using namespace std::chrono;
  const sys_days days{year_month_day{std::chrono::year{year}, std::chrono::month{month},
                                     std::chrono::day{day}}};
  const std::int64_t secs = static_cast<std::int64_t>(days.time_since_epoch().count()) * kSecondsPerDay +
                            hour * 3600 + minute * 60 + second;
  return from_micros(secs * kMicrosPerSecond + micros);
}

std::optional<Timestamp> Timestamp::parse(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);

  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
  if (!read_digits(text, 0, 4, year) || text.size() < 10 || text[4] != '-' ||
      !read_digits(text, 5, 2, month) || text[7] != '-' || !read_digits(text, 8, 2, day)) {
    return std::nullopt;
  }
  int micros = 0;
  if (text.size() > 10) {
    if ((text[10] != ' ' && text[10] != 'T') || !read_digits(text, 11, 2, hour) ||
        text.size() < 19 || text[13] != ':' || !read_digits(text, 14, 2, minute) ||
        text[16] != ':' || !read_digits(text, 17, 2, second)) {
      return std::nullopt;
    }
    std::size_t pos = 19;
    if (pos < text.size()) {
      if (text[pos] != '.' || pos + 1 == text.size()) return std::nullopt;
      ++pos;
      int scale = 100'000;
      for (; pos < text.size(); ++pos) {
        const char c = text[pos];
        if (c < '0' || c > '9') return std::nullopt;
        micros += (c - '0') * scale;
        scale /= 10;
      }
    }
  }

  const std::chrono::year_month_day ymd{std::chrono::year{year},
                                        std::chrono::month{static_cast<unsigned>(month)},
                                        std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 59) return std::nullopt;
  return from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day), hour, minute,
                    second, micros);
}

std::string Timestamp::to_string() const {
  using namespace std::chrono;
  std::int64_t secs = micros_ / kMicrosPerSecond;
  std::int64_t frac = micros_ % kMicrosPerSecond;
  if (frac < 0) {
    frac += kMicrosPerSecond;
    --secs;
  }
  std::int64_t days = secs / kSecondsPerDay;
  std::int64_t rem = secs % kSecondsPerDay;
  if (rem < 0) {
    rem += kSecondsPerDay;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[40];
  int n = std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u %02d:%02d:%02d", static_cast<int>(ymd.year()),
                        static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                        static_cast<int>(rem / 3600), static_cast<int>(rem % 3600 / 60),
                        static_cast<int>(rem % 60));
  if (frac != 0) {
    std::snprintf(buf + n, sizeof(buf) - static_cast<std::size_t>(n), ".%06lld",
                  static_cast<long long>(frac));
  }
  return buf;
}

}  // namespace duraflow
