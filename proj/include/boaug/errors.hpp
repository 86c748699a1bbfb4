/**
 * Copyright 2026 The BO-Aug Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef BOAUG_ERRORS_HPP_
#define BOAUG_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace boaug {

/// Invalid value fed to an operation (out-of-range magnitude, bad probability, ...).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// A file does not conform to its declared format.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad or inconsistent configuration (unknown evaluator name, missing path, ...).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An external evaluator violated the wire protocol.
struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An evaluation could not be completed (timeout, child death, ...).
struct EvaluationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A numerical routine failed beyond recovery (factorization breakdown, ...).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace boaug

#endif  // BOAUG_ERRORS_HPP_
