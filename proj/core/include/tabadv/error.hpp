// Copyright 2026 The tabadv Authors.
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

#ifndef TABADV_ERROR_HPP_
#define TABADV_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace tabadv {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

// Malformed input file content. Carries the 1-based data row (header
// excluded) and the column name when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row, std::string column)
      : Error(what), row_(row), column_(std::move(column)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

class PreprocessingError : public Error {
 public:
  using Error::Error;
};

class StratificationError : public Error {
 public:
  using Error::Error;
};

class StatisticsError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Violated precondition of a public operation.
class ContractError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace tabadv

#endif  // TABADV_ERROR_HPP_
