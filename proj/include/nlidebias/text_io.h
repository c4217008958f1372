// Copyright 2026 The nlidebias Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NLIDEBIAS_TEXT_IO_H_
#define NLIDEBIAS_TEXT_IO_H_

#include <charconv>
#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "nlidebias/error.h"

namespace nlidebias {

// Shortest decimal form that parses back to the same double.
inline std::string FormatDouble(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Fixed-point rendering for human-facing tables.
inline std::string FormatFixed(double v, int digits) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::fixed, digits);
  return std::string(buf, res.ptr);
}

inline double ParseDouble(std::string_view s) {
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw InvalidArgument("not a number: '" + std::string(s) + "'");
  }
  return v;
}

inline std::uint64_t ParseUint(std::string_view s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw InvalidArgument("not a non-negative integer: '" + std::string(s) +
                          "'");
  }
  return v;
}

inline std::vector<std::string_view> SplitView(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto end = s.find(sep, start);
    out.push_back(s.substr(start, end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

// The views would dangle.
std::vector<std::string_view> SplitView(std::string&& s, char sep) = delete;

inline std::string_view Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Reads one line and checks it starts with `keyword`; returns the remainder
// after the keyword and a single space.
inline std::string ExpectLine(std::istream& in, std::string_view keyword) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error("unexpected end of file, expected '" + std::string(keyword) +
                "'");
  }
  if (line.rfind(keyword, 0) != 0) {
    throw Error("expected '" + std::string(keyword) + "', got '" + line + "'");
  }
  if (line.size() == keyword.size()) return {};
  if (line[keyword.size()] != ' ') {
    throw Error("malformed line '" + line + "'");
  }
  return line.substr(keyword.size() + 1);
}

}  // namespace nlidebias

#endif  // NLIDEBIAS_TEXT_IO_H_
