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

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "collapse_lab/errors.hpp"
#include "collapse_lab/tensor.hpp"

namespace collapse_lab::net {

struct Dataset {
  std::size_t dim = 0;
  std::size_t classes = 0;
  Tensor train_x;
  std::vector<int> train_y;
  Tensor val_x;
  std::vector<int> val_y;

  std::size_t size() const { return train_y.size() + val_y.size(); }
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Gaussian clusters with unit covariance around class means placed on a
/// regular simplex: mean_k = separation · (e_k − 1/classes) in the first
/// `classes` coordinates. Points are shuffled once and split 80/20.
inline Dataset make_synthetic_dataset(std::size_t classes, std::size_t dim, std::size_t n_per_class,
                                      std::uint64_t seed, double separation = 3.0) {
  if (classes < 2) throw DomainError("dataset: classes must be >= 2");
  if (dim < classes) throw DomainError("dataset: dim must be >= classes");
  if (n_per_class < 5) throw DomainError("dataset: n_per_class must be >= 5");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::size_t n = classes * n_per_class;
  Tensor x(n, dim);
  std::vector<int> y(n);
  for (std::size_t k = 0; k < classes; ++k) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      const std::size_t r = k * n_per_class + i;
      y[r] = static_cast<int>(k);
      for (std::size_t d = 0; d < dim; ++d) {
        double mean = 0.0;
        if (d < classes) mean = separation * ((d == k ? 1.0 : 0.0) - 1.0 / static_cast<double>(classes));
        x.at(r, d) = mean + noise(gen);
      }
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), gen);

  Dataset ds;
  ds.dim = dim;
  ds.classes = classes;
  const std::size_t n_train = n * 4 / 5;
  ds.train_x = Tensor(n_train, dim);
  ds.val_x = Tensor(n - n_train, dim);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = order[i];
    auto dst = i < n_train ? ds.train_x.row(i) : ds.val_x.row(i - n_train);
    std::copy_n(x.row(src).begin(), dim, dst.begin());
    (i < n_train ? ds.train_y.emplace_back(y[src]) : ds.val_y.emplace_back(y[src]));
  }
  return ds;
}

/// Permutes the training labels once. The new image-label pairing is then
/// fixed for all epochs. Validation labels are left intact.
inline Dataset shuffle_labels(Dataset ds, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::shuffle(ds.train_y.begin(), ds.train_y.end(), gen);
  return ds;
}

/// Gathers rows `idx` of x into a batch.
inline Tensor gather_rows(const Tensor& x, std::span<const std::size_t> idx) {
  Tensor out(idx.size(), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy_n(x.row(idx[i]).begin(), x.cols(), out.row(i).begin());
  }
  return out;
}

}  // namespace collapse_lab::net
