// Copyright 2026 The collapse-lab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "collapse_lab/dist.hpp"
#include "collapse_lab/errors.hpp"

namespace collapse_lab {

/// Minimal comma-separated table. Fields never contain commas, quotes or
/// newlines in anything this project writes, so no quoting is done.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw StructuralError("csv: missing column '" + name + "'");
  }

  const std::string& get(std::size_t row, const std::string& name) const { return rows.at(row).at(column(name)); }
  double get_double(std::size_t row, const std::string& name) const {
    const auto& s = get(row, name);
    if (s == "nan") return std::nan("");
    return detail::parse_double(s, name);
  }

  std::string to_string() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
      }
      out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }

  static CsvTable parse(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      auto cells = detail::split(line, ',');
      if (first) {
        t.header = std::move(cells);
        first = false;
      } else {
        if (cells.size() != t.header.size()) throw StructuralError("csv: row width differs from header");
        t.rows.push_back(std::move(cells));
      }
    }
    if (first) throw StructuralError("csv: empty input");
    return t;
  }
};

/// Number formatting used in every emitted file: shortest round-trip form,
/// "nan" for NaN.
inline std::string fmt_num(double v) {
  if (std::isnan(v)) return "nan";
  if (v == 0.0) return "0";
  return detail::format_double(v);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw RuntimeError("write failed for '" + path + "'");
}

}  // namespace collapse_lab
