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

#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "collapse_lab/dist.hpp"
#include "collapse_lab/errors.hpp"

namespace collapse_lab::config {

/// Flat sectioned key=value settings:
///
///   # comment
///   [train]
///   eta_max = 0.5
///   rounds = 5
///
/// Keys outside any section belong to section "".
using Sections = std::map<std::string, std::map<std::string, std::string>>;

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline Sections parse_sections(const std::string& text) {
  Sections out;
  std::string section;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      out[section];
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    out[section][key] = trim(line.substr(eq + 1));
  }
  return out;
}

/// Resolved settings for one command, with typed accessors that name the
/// offending field in every error.
class Settings {
 public:
  Settings() = default;
  explicit Settings(std::set<std::string> allowed) : allowed_(std::move(allowed)) {}

  /// Later calls override earlier ones. Unknown keys are rejected.
  void overlay(const std::map<std::string, std::string>& values, const std::string& origin) {
    for (const auto& [k, v] : values) {
      if (!allowed_.count(k)) throw ConfigError(origin + ": unknown key '" + k + "'");
      values_[k] = v;
    }
  }
  void set(const std::string& key, const std::string& value) { overlay({{key, value}}, "flag"); }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string str(const std::string& key, const std::string& fallback = {}) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double real(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return detail::parse_double(it->second, key);
  }

  long long integer(const std::string& key, long long fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const double v = detail::parse_double(it->second, key);
    if (v != std::floor(v) || std::abs(v) > 9.0e15) throw ConfigError(key + ": expected an integer, got '" + it->second + "'");
    return static_cast<long long>(v);
  }

  bool flag(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return false;
    const auto& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v.empty()) return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true/false, got '" + v + "'");
  }

  ScalarDist dist(const std::string& key, const ScalarDist& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      return ScalarDist::parse(it->second);
    } catch (const ConfigError& e) {
      throw ConfigError(key + ": " + e.what());
    }
  }

 private:
  std::set<std::string> allowed_;
  std::map<std::string, std::string> values_;
};

/// Inclusive grid `start:stop:step`; the point count is round((stop−start)/step)+1
/// and points are start + i·step.
inline std::vector<double> parse_grid(const std::string& text, const std::string& field) {
  auto parts = detail::split(text, ':');
  if (parts.size() != 3) throw ConfigError(field + ": expected start:stop:step, got '" + text + "'");
  const double a = detail::parse_double(parts[0], field);
  const double b = detail::parse_double(parts[1], field);
  const double step = detail::parse_double(parts[2], field);
  if (!(step > 0.0) || !(b >= a)) throw ConfigError(field + ": need step > 0 and stop >= start");
  const double count = std::round((b - a) / step);
  if (count > 1e7) throw ConfigError(field + ": grid has too many points");
  std::vector<double> out;
  for (long i = 0; i <= static_cast<long>(count); ++i) out.push_back(a + static_cast<double>(i) * step);
  return out;
}

}  // namespace collapse_lab::config
