#pragma once

// Minimal CSV reading for the fixed, numeric schemas this library exchanges.

#include <charconv>
#include <cstdint>
#include <initializer_list>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "probseq/syncsim.hpp"

namespace probseq::csv {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<std::int64_t> parse_int(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

class Reader {
 public:
  Reader(std::istream& in, std::initializer_list<std::string_view> header) : in_(in), width_(header.size()) {
    std::string line;
    while (std::getline(in_, line)) {
      ++lineno_;
      if (!trim(line).empty()) break;
    }
    const auto cols = split(line);
    bool ok = cols.size() == header.size();
    std::size_t i = 0;
    for (auto h : header) {
      if (!ok) break;
      ok = cols[i++] == h;
    }
    if (!ok) {
      std::string expected;
      for (auto h : header) expected += (expected.empty() ? "" : ",") + std::string(h);
      throw ConfigError("csv header mismatch: expected '" + expected + "'");
    }
  }

  std::optional<std::vector<std::string>> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++lineno_;
      if (trim(line).empty()) continue;
      auto cols = split(line);
      if (cols.size() != width_) {
        throw ConfigError("csv line " + std::to_string(lineno_) + ": expected " + std::to_string(width_) +
                          " columns");
      }
      return cols;
    }
    return std::nullopt;
  }

  std::int64_t get_int(const std::vector<std::string>& row, std::size_t col) const {
    const auto v = parse_int(row.at(col));
    if (!v) throw ConfigError("csv line " + std::to_string(lineno_) + ": column " + std::to_string(col + 1) +
                              " is not an integer");
    return *v;
  }

 private:
  std::istream& in_;
  std::size_t width_;
  std::size_t lineno_ = 0;
};

}  // namespace probseq::csv
