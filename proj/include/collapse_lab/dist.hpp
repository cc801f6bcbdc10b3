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

#include <charconv>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "collapse_lab/errors.hpp"
#include "collapse_lab/normal.hpp"

namespace collapse_lab {

struct Uniform {
  double lo;
  double hi;
};

struct Normal {
  double mean;
  double sd;
};

struct PointMass {
  double value;
};

/// One-dimensional distribution used for P(γ), P(β) and the gradient noise.
/// Invariants are checked by the factory functions; a default-constructed
/// ScalarDist is PointMass(0).
class ScalarDist {
 public:
  using Kind = std::variant<Uniform, Normal, PointMass>;

  ScalarDist() : kind_(PointMass{0.0}) {}

  static ScalarDist uniform(double lo, double hi) {
    require_finite(lo, "uniform.lo");
    require_finite(hi, "uniform.hi");
    if (!(lo < hi)) throw DomainError("uniform: requires lo < hi");
    return ScalarDist(Uniform{lo, hi});
  }
  static ScalarDist normal(double mean, double sd) {
    require_finite(mean, "normal.mean");
    require_finite(sd, "normal.sd");
    if (!(sd > 0.0)) throw DomainError("normal: requires sd > 0");
    return ScalarDist(Normal{mean, sd});
  }
  static ScalarDist point(double value) {
    require_finite(value, "point.value");
    return ScalarDist(PointMass{value});
  }

  /// Parses the `kind:param[:param]` mini-grammar, e.g. `uniform:-1:1`,
  /// `normal:0:0.5`, `point:0`.
  static ScalarDist parse(std::string_view text);

  const Kind& kind() const { return kind_; }
  bool is_point() const { return std::holds_alternative<PointMass>(kind_); }

  double mean() const {
    return std::visit(
        [](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, Uniform>) return 0.5 * (d.lo + d.hi);
          else if constexpr (std::is_same_v<T, Normal>) return d.mean;
          else return d.value;
        },
        kind_);
  }

  double sd() const {
    return std::visit(
        [](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, Uniform>) return (d.hi - d.lo) / std::sqrt(12.0);
          else if constexpr (std::is_same_v<T, Normal>) return d.sd;
          else return 0.0;
        },
        kind_);
  }

  /// Symmetric about zero.
  bool is_even() const { return mean() == 0.0; }

  double support_lo() const {
    return std::visit(
        [](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, Uniform>) return d.lo;
          else if constexpr (std::is_same_v<T, Normal>) return -std::numeric_limits<double>::infinity();
          else return d.value;
        },
        kind_);
  }

  double support_hi() const {
    return std::visit(
        [](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, Uniform>) return d.hi;
          else if constexpr (std::is_same_v<T, Normal>) return std::numeric_limits<double>::infinity();
          else return d.value;
        },
        kind_);
  }

  /// Probability density. PointMass has no density and throws.
  double density(double x) const {
    return std::visit(
        [x](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, Uniform>) {
            return (x >= d.lo && x <= d.hi) ? 1.0 / (d.hi - d.lo) : 0.0;
          } else if constexpr (std::is_same_v<T, Normal>) {
            return analytic::std_normal_pdf((x - d.mean) / d.sd) / d.sd;
          } else {
            throw UnsupportedError("point mass has no density");
          }
        },
        kind_);
  }

  std::string to_string() const;

  friend bool operator==(const ScalarDist& a, const ScalarDist& b) {
    return a.to_string() == b.to_string();
  }

 private:
  explicit ScalarDist(Kind k) : kind_(k) {}
  Kind kind_;
};

/// Stateful sampler for one ScalarDist; keeps the normal generator's cached
/// second variate between calls.
class DistSampler {
 public:
  explicit DistSampler(ScalarDist dist) : dist_(dist) {}

  template <class Urbg>
  double operator()(Urbg& gen) {
    return std::visit(
        [&](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, Uniform>) {
            return d.lo + (d.hi - d.lo) * unit_(gen);
          } else if constexpr (std::is_same_v<T, Normal>) {
            return d.mean + d.sd * normal_(gen);
          } else {
            return d.value;
          }
        },
        dist_.kind());
  }

  const ScalarDist& dist() const { return dist_; }

 private:
  ScalarDist dist_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

namespace detail {

inline std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = text.find(sep, start);
    out.emplace_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(const std::string& s, const std::string& field) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError(field + ": not a number: '" + s + "'");
  }
  if (used != s.size()) throw ConfigError(field + ": trailing characters in '" + s + "'");
  if (!std::isfinite(v)) throw ConfigError(field + ": non-finite value");
  return v;
}

/// Shortest text that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

inline ScalarDist ScalarDist::parse(std::string_view text) {
  auto parts = detail::split(text, ':');
  const std::string field = "distribution '" + std::string(text) + "'";
  try {
    if (parts[0] == "uniform" && parts.size() == 3) {
      return uniform(detail::parse_double(parts[1], field), detail::parse_double(parts[2], field));
    }
    if (parts[0] == "normal" && parts.size() == 3) {
      return normal(detail::parse_double(parts[1], field), detail::parse_double(parts[2], field));
    }
    if (parts[0] == "point" && parts.size() == 2) {
      return point(detail::parse_double(parts[1], field));
    }
  } catch (const DomainError& e) {
    throw ConfigError(field + ": " + e.what());
  }
  throw ConfigError(field + ": expected uniform:lo:hi, normal:mean:sd or point:value");
}

inline std::string ScalarDist::to_string() const {
  using detail::format_double;
  return std::visit(
      [](const auto& d) -> std::string {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Uniform>) {
          return "uniform:" + format_double(d.lo) + ":" + format_double(d.hi);
        } else if constexpr (std::is_same_v<T, Normal>) {
          return "normal:" + format_double(d.mean) + ":" + format_double(d.sd);
        } else {
          return "point:" + format_double(d.value);
        }
      },
      kind_);
}

}  // namespace collapse_lab
