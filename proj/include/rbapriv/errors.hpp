// Copyright 2026 The rbapriv Authors
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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rbapriv {

/// Base class of every exception thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid model or store configuration, e.g. an unknown feature id.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A function argument outside its documented domain.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. `line()` is 1-based, or 0 when not line oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Structurally invalid dataset or result file. `row()` is the 1-based data
/// row, or 0 for header problems.
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t row = 0)
      : Error(row == 0 ? what : "row " + std::to_string(row) + ": " + what),
        row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// A dataset profile that cannot be realised (e.g. fewer logins than users).
class ProfileError : public Error {
 public:
  using Error::Error;
};

/// The attacker pools offer nothing to sample for a given victim.
class NoAttackerMaterial : public Error {
 public:
  using Error::Error;
};

/// An evaluation that cannot produce meaningful metrics.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

}  // namespace rbapriv
