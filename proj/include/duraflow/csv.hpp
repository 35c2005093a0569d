#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace duraflow::csv {

// One logical CSV record. line is the 1-based physical line the record starts on.
struct Row {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

// RFC 4180 reader: quoted fields may contain separators, doubled quotes and
// line breaks. Accepts LF and CRLF line endings.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  // Returns std::nullopt at end of input. Blank lines are skipped.
  std::optional<Row> next();

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

std::vector<std::string> split_line(std::string_view line);

// Quotes a field only when it contains a separator, quote, CR or LF.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

}  // namespace duraflow::csv
