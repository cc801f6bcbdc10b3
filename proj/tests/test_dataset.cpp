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

#include <algorithm>
#include <map>

#include "collapse_lab/dataset.hpp"

using namespace collapse_lab::net;

TEST(Dataset, SizesAndSplit) {
  auto ds = make_synthetic_dataset(10, 32, 500, 1);
  EXPECT_EQ(ds.size(), 5000u);
  EXPECT_EQ(ds.train_y.size(), 4000u);
  EXPECT_EQ(ds.val_y.size(), 1000u);
  EXPECT_EQ(ds.train_x.rows(), 4000u);
  EXPECT_EQ(ds.train_x.cols(), 32u);
  EXPECT_EQ(ds.val_x.rows(), 1000u);
}

TEST(Dataset, Deterministic) {
  EXPECT_EQ(make_synthetic_dataset(4, 8, 50, 7), make_synthetic_dataset(4, 8, 50, 7));
  EXPECT_FALSE(make_synthetic_dataset(4, 8, 50, 7) == make_synthetic_dataset(4, 8, 50, 8));
}

TEST(Dataset, BayesBoundaryOnTwoClasses) {
  // Means are ±1.5·(1, −1); the Bayes rule is x0 > x1 ⇒ class 0.
  auto ds = make_synthetic_dataset(2, 2, 1000, 3);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.val_y.size(); ++i) {
    const int pred = ds.val_x.at(i, 0) > ds.val_x.at(i, 1) ? 0 : 1;
    correct += pred == ds.val_y[i];
  }
  EXPECT_GT(static_cast<double>(correct) / static_cast<double>(ds.val_y.size()), 0.95);
}

TEST(Dataset, ClassMeansOnSimplex) {
  auto ds = make_synthetic_dataset(3, 5, 2000, 4, 3.0);
  std::vector<std::vector<double>> sum(3, std::vector<double>(5, 0.0));
  std::vector<double> count(3, 0.0);
  for (std::size_t i = 0; i < ds.train_y.size(); ++i) {
    count[ds.train_y[i]] += 1.0;
    for (std::size_t d = 0; d < 5; ++d) sum[ds.train_y[i]][d] += ds.train_x.at(i, d);
  }
  for (int k = 0; k < 3; ++k) {
    for (std::size_t d = 0; d < 5; ++d) {
      const double want = d < 3 ? 3.0 * ((static_cast<int>(d) == k ? 1.0 : 0.0) - 1.0 / 3.0) : 0.0;
      EXPECT_NEAR(sum[k][d] / count[k], want, 0.1);
    }
  }
}

TEST(Dataset, Preconditions) {
  EXPECT_THROW(make_synthetic_dataset(1, 4, 10, 0), collapse_lab::DomainError);
  EXPECT_THROW(make_synthetic_dataset(5, 4, 10, 0), collapse_lab::DomainError);
}

TEST(ShuffleLabels, PermutationOfTrainLabelsOnly) {
  auto ds = make_synthetic_dataset(10, 16, 200, 5);
  auto sh = shuffle_labels(ds, 9);
  auto a = ds.train_y, b = sh.train_y;
  EXPECT_NE(a, b);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  EXPECT_EQ(a, b);
  EXPECT_EQ(sh.val_y, ds.val_y);
  EXPECT_EQ(sh.train_x, ds.train_x);
  EXPECT_EQ(shuffle_labels(ds, 9), sh);
}

TEST(ShuffleLabels, ConstantPredictorNearChance) {
  auto sh = shuffle_labels(make_synthetic_dataset(10, 16, 500, 6), 2);
  std::map<int, std::size_t> freq;
  for (int y : sh.train_y) ++freq[y];
  std::size_t best = 0;
  for (auto [k, n] : freq) best = std::max(best, n);
  EXPECT_NEAR(static_cast<double>(best) / static_cast<double>(sh.train_y.size()), 0.1, 0.02);
  // The shuffled labels carry no information about the inputs: agreement
  // with the original labels is at chance level.
  auto orig = make_synthetic_dataset(10, 16, 500, 6);
  std::size_t same = 0;
  for (std::size_t i = 0; i < sh.train_y.size(); ++i) same += sh.train_y[i] == orig.train_y[i];
  EXPECT_NEAR(static_cast<double>(same) / static_cast<double>(sh.train_y.size()), 0.1, 0.03);
}

TEST(GatherRows, CopiesSelectedRows) {
  Tensor x(3, 2);
  for (std::size_t i = 0; i < 6; ++i) x[i] = static_cast<double>(i);
  std::vector<std::size_t> idx{2, 0};
  Tensor g = gather_rows(x, idx);
  EXPECT_EQ(g.storage(), (std::vector<double>{4, 5, 0, 1}));
}
