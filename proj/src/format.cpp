#include "ditsched/format.hpp"

#include <charconv>
#include <cmath>

#include "ditsched/error.hpp"

namespace ditsched {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) fail(ErrorKind::Internal, "cannot format double");
  return std::string(buf, ptr);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(s.substr(start)));
      return out;
    }
    out.push_back(trim(s.substr(start, pos - start)));
    start = pos + 1;
  }
}

double parse_double(std::string_view s, const std::string& where) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    fail(ErrorKind::Format, where + ": expected a number, got '" + std::string(s) + "'");
  return v;
}

std::int64_t parse_int(std::string_view s, const std::string& where) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    fail(ErrorKind::Format, where + ": expected an integer, got '" + std::string(s) + "'");
  return v;
}

CsvReader::CsvReader(std::istream& in, std::string source, std::vector<std::string> expected_header)
    : in_(in), source_(std::move(source)), columns_(expected_header.size()) {
  std::string header;
  while (std::getline(in_, header)) {
    ++line_;
    if (!trim(header).empty()) break;
  }
  auto got = split(trim(header), ',');
  bool ok = got.size() == expected_header.size();
  for (std::size_t i = 0; ok && i < got.size(); ++i) ok = got[i] == expected_header[i];
  if (!ok) {
    std::string want;
    for (auto& h : expected_header) want += (want.empty() ? "" : ",") + h;
    fail(ErrorKind::Format, source_ + ":" + std::to_string(line_) + ": expected header '" + want + "'");
  }
}

bool CsvReader::next(std::vector<std::string_view>& fields) {
  while (std::getline(in_, buf_)) {
    ++line_;
    if (trim(buf_).empty()) continue;
    fields = split(buf_, ',');
    if (fields.size() != columns_)
      fail(ErrorKind::Format, source_ + ":" + std::to_string(line_) + ": expected " + std::to_string(columns_) +
                                  " fields, got " + std::to_string(fields.size()));
    return true;
  }
  return false;
}

std::string CsvReader::where(std::string_view column) const {
  return source_ + ":" + std::to_string(line_) + " (" + std::string(column) + ")";
}

}  // namespace ditsched
