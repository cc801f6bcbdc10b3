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

#include "collapse_lab/analytic.hpp"
#include "collapse_lab/config.hpp"
#include "collapse_lab/csv.hpp"
#include "collapse_lab/dataset.hpp"
#include "collapse_lab/dist.hpp"
#include "collapse_lab/errors.hpp"
#include "collapse_lab/layers.hpp"
#include "collapse_lab/mc.hpp"
#include "collapse_lab/model.hpp"
#include "collapse_lab/normal.hpp"
#include "collapse_lab/parallel.hpp"
#include "collapse_lab/plots.hpp"
#include "collapse_lab/quadrature.hpp"
#include "collapse_lab/sparsity.hpp"
#include "collapse_lab/svg.hpp"
#include "collapse_lab/tensor.hpp"
#include "collapse_lab/train.hpp"
