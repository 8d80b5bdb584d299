#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace ditsched {

// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

// Parsers report `where` (e.g. "line 7, column 'degree'") on failure.
double parse_double(std::string_view s, const std::string& where);
std::int64_t parse_int(std::string_view s, const std::string& where);

/// Line-oriented CSV reader: skips blank lines, validates the header row.
class CsvReader {
 public:
  CsvReader(std::istream& in, std::string source, std::vector<std::string> expected_header);

  // Returns false at end of input. Fields are views into an internal buffer
  // that stays valid until the next call.
  bool next(std::vector<std::string_view>& fields);
  int line() const { return line_; }
  std::string where(std::string_view column) const;

 private:
  std::istream& in_;
  std::string source_;
  std::size_t columns_;
  std::string buf_;
  int line_ = 0;
};

}  // namespace ditsched
