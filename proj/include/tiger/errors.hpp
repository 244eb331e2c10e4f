// Copyright 2026 The tiger-retrieval Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace tiger {

// Base of every error thrown by the library. The CLI maps subclasses onto
// exit codes, so new error kinds should derive from the closest category.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor / graph errors.
class ShapeError : public Error {
 public:
  using Error::Error;
};
class NumericError : public Error {
 public:
  using Error::Error;
};
class ContractError : public Error {
 public:
  using Error::Error;
};
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Configuration errors (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};
// A requested split cannot be realised on the given data (exit code 3).
class SplitInfeasibleError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Data and format errors (exit code 4).
class DataError : public Error {
 public:
  using Error::Error;
};
class FormatError : public DataError {
 public:
  using DataError::DataError;
};
class ConsistencyError : public DataError {
 public:
  using DataError::DataError;
};
class ParseError : public DataError {
 public:
  using DataError::DataError;
};
class LookupError : public DataError {
 public:
  using DataError::DataError;
};
class IoError : public DataError {
 public:
  using DataError::DataError;
};

class DomainError : public Error {
 public:
  using Error::Error;
};
class StateError : public Error {
 public:
  using Error::Error;
};
class OracleError : public Error {
 public:
  using Error::Error;
};

}  // namespace tiger
