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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "collapse_lab/config.hpp"
#include "collapse_lab/csv.hpp"
#include "collapse_lab/svg.hpp"

using namespace collapse_lab;

TEST(Config, ParseSections) {
  auto s = config::parse_sections(
      "seed = 4   # global\n"
      "\n"
      "[train]\n"
      "eta_max = 0.5\n"
      "  rounds=5  \n"
      "[mc]\r\n"
      "noise = uniform:0.5\n");
  EXPECT_EQ(s.at("").at("seed"), "4");
  EXPECT_EQ(s.at("train").at("eta_max"), "0.5");
  EXPECT_EQ(s.at("train").at("rounds"), "5");
  EXPECT_EQ(s.at("mc").at("noise"), "uniform:0.5");
}

TEST(Config, ParseErrors) {
  EXPECT_THROW(config::parse_sections("[train\n"), ConfigError);
  EXPECT_THROW(config::parse_sections("eta_max\n"), ConfigError);
  EXPECT_THROW(config::parse_sections(" = 3\n"), ConfigError);
}

TEST(Config, LaterOverlayWins) {
  config::Settings s({"eta", "rounds", "fast"});
  s.overlay({{"eta", "0.1"}, {"rounds", "5"}}, "preset");
  s.overlay({{"eta", "0.2"}}, "config");
  s.set("rounds", "7");
  EXPECT_DOUBLE_EQ(s.real("eta", 0.0), 0.2);
  EXPECT_EQ(s.integer("rounds", 0), 7);
  EXPECT_FALSE(s.flag("fast"));
  EXPECT_DOUBLE_EQ(s.real("missing_but_defaulted", 1.5), 1.5);
}

TEST(Config, UnknownAndMalformedValues) {
  config::Settings s({"eta", "rounds", "fast", "noise"});
  EXPECT_THROW(s.set("etaa", "1"), ConfigError);
  s.set("eta", "abc");
  EXPECT_THROW(s.real("eta", 0.0), ConfigError);
  s.set("rounds", "2.5");
  EXPECT_THROW(s.integer("rounds", 0), ConfigError);
  s.set("fast", "maybe");
  EXPECT_THROW(s.flag("fast"), ConfigError);
  s.set("noise", "cauchy:1");
  EXPECT_THROW(s.dist("noise", ScalarDist::point(0.0)), ConfigError);
}

TEST(Config, ErrorNamesField) {
  config::Settings s({"eta"});
  s.set("eta", "x");
  try {
    s.real("eta", 0.0);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("eta"), std::string::npos);
  }
}

TEST(Grid, PointCount) {
  auto g = config::parse_grid("-4:4:0.01", "k_grid");
  ASSERT_EQ(g.size(), 801u);
  EXPECT_DOUBLE_EQ(g.front(), -4.0);
  EXPECT_NEAR(g.back(), 4.0, 1e-12);
  EXPECT_NEAR(g[400], 0.0, 1e-12);
  EXPECT_EQ(config::parse_grid("0.1:5:0.1", "gamma_grid").size(), 50u);
  EXPECT_EQ(config::parse_grid("2:2:1", "g").size(), 1u);
}

TEST(Grid, Errors) {
  EXPECT_THROW(config::parse_grid("1:2", "g"), ConfigError);
  EXPECT_THROW(config::parse_grid("1:2:0", "g"), ConfigError);
  EXPECT_THROW(config::parse_grid("2:1:0.1", "g"), ConfigError);
  EXPECT_THROW(config::parse_grid("0:1:1e-9", "g"), ConfigError);
  EXPECT_THROW(config::parse_grid("a:1:0.1", "g"), ConfigError);
}

TEST(Csv, RoundTripPreservesDoubles) {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> nd(0.0, 1e3);
  CsvTable t;
  t.header = {"x", "y"};
  std::vector<double> xs;
  for (int i = 0; i < 200; ++i) {
    double v = nd(gen) * std::pow(10.0, i % 30 - 15);
    xs.push_back(v);
    t.rows.push_back({fmt_num(v), fmt_num(-v)});
  }
  auto back = CsvTable::parse(t.to_string());
  ASSERT_EQ(back.rows.size(), xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    EXPECT_EQ(back.get_double(i, "x"), xs[i]);
    EXPECT_EQ(back.get_double(i, "y"), -xs[i]);
  }
}

TEST(Csv, Formatting) {
  EXPECT_EQ(fmt_num(0.0), "0");
  EXPECT_EQ(fmt_num(-0.0), "0");
  EXPECT_EQ(fmt_num(std::nan("")), "nan");
  EXPECT_EQ(fmt_num(0.5), "0.5");
}

TEST(Csv, Errors) {
  EXPECT_THROW(CsvTable::parse(""), StructuralError);
  EXPECT_THROW(CsvTable::parse("a,b\n1\n"), StructuralError);
  auto t = CsvTable::parse("a,b\r\n1,2\r\n");
  EXPECT_THROW(t.get(0, "c"), StructuralError);
  EXPECT_EQ(t.get(0, "b"), "2");
  EXPECT_THROW(read_file("/nonexistent/dir/file.csv"), RuntimeError);
}

TEST(Svg, DeterministicAndEscaped) {
  svg::PlotSpec spec;
  spec.title = "a < b & c";
  spec.x_label = "x";
  spec.y_label = "y";
  svg::Series s{"curve", {0, 1, 2, 3}, {-1, 0.5, 2, 1}};
  auto a = svg::render(spec, {s});
  auto b = svg::render(spec, {s});
  EXPECT_EQ(a, b);
  EXPECT_NE(a.find("<svg"), std::string::npos);
  EXPECT_NE(a.find("a &lt; b &amp; c"), std::string::npos);
  EXPECT_NE(a.find("</svg>"), std::string::npos);
}

TEST(Svg, LogAxisAndEmptySeries) {
  svg::PlotSpec spec;
  spec.log_y = true;
  svg::Series s{"pos", {1, 2, 3}, {1e-6, 1e-3, 1}};
  auto out = svg::render(spec, {s, svg::Series{"empty", {}, {}}});
  EXPECT_NE(out.find("</svg>"), std::string::npos);
  EXPECT_EQ(out.find("nan"), std::string::npos);
  EXPECT_EQ(out.find("inf"), std::string::npos);
}

TEST(Files, WriteThenRead) {
  auto p = std::filesystem::temp_directory_path() / "collapse_lab_io_test.txt";
  write_file(p.string(), "hello\n");
  EXPECT_EQ(read_file(p.string()), "hello\n");
  std::filesystem::remove(p);
}
