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

#include <stdexcept>
#include <string>

namespace collapse_lab {

// Error taxonomy shared by every module. The CLI maps ConfigError to exit
// code 2 and RuntimeError (and subclasses) to exit code 3.

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A 1/γ or 1/γ² factor would be evaluated at (or integrated across) zero.
class SingularityError : public DomainError {
 public:
  using DomainError::DomainError;
};

class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite state reached during simulation or training.
class DivergenceError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

inline void require_finite(double x, const char* what) {
  if (!(x - x == 0.0)) {
    throw DomainError(std::string(what) + ": non-finite input");
  }
}

}  // namespace collapse_lab
