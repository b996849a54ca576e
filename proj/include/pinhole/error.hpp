// Copyright 2026 The Pinhole Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PINHOLE_ERROR_HPP_
#define PINHOLE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace pinhole {

// Exception taxonomy. The CLI maps each class onto a fixed exit code:
// ConfigError -> 1, DataError -> 2, NumericalError -> 3.

/// Invalid configuration or parameter value (a caller bug, not bad data).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed, inconsistent or insufficient input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation that is undefined for the given input (singular matrix,
/// zero-norm vector, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pinhole

#endif  // PINHOLE_ERROR_HPP_
