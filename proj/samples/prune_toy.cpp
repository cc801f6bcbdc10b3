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

// Trains a small BN network with strong weight decay, then prunes the
// channels whose BN scale fell below 1e-3.

#include <cstdio>

#include "collapse_lab/sparsity.hpp"
#include "collapse_lab/train.hpp"

using namespace collapse_lab;

int main() {
  net::TrainConfig cfg;
  cfg.rounds = 3;
  cfg.epochs_per_round = 5;
  cfg.weight_decay = 5e-3;
  cfg.eta_max = 0.5;
  net::Trainer trainer(cfg);
  for (int r = 0; r < cfg.rounds; ++r) {
    const auto rep = trainer.train_round();
    std::printf("round %d: val_acc %.4f sparsity %.4f flops_reduction %.4f\n", rep.round_index, rep.val_acc,
                rep.sparsity.sparsity_ratio, rep.sparsity.flops_reduction);
  }

  auto& model = trainer.model();
  const auto& data = trainer.data();
  const double before = net::evaluate(model, data.val_x, data.val_y).accuracy;
  const std::size_t pruned = sparsity::prune_collapsed(model);
  const double after = net::evaluate(model, data.val_x, data.val_y).accuracy;
  std::printf("pruned %zu channels: val_acc %.4f -> %.4f\n", pruned, before, after);
}
