// Copyright 2026 The snas Authors.
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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace snas {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input (grammar files, architecture strings). Carries a
/// 1-based line and column when known; column is a byte offset for
/// single-line inputs.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what + " (line " + std::to_string(line) + ", column " +
              std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// An architecture string names an operation the grammar does not know.
class UnknownOpError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// A structurally well-formed input violates a semantic invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// No derivation fits within the remaining depth budget.
class SamplingExhausted : public Error {
 public:
  using Error::Error;
};

/// Tensor-shape inference rejected an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An augmentation has no applicable site in the given tree.
class NotApplicable : public Error {
 public:
  using Error::Error;
};

/// Feature schemas disagree (collision on concat, mismatch on predict).
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Lookup failure in a replay dataset.
class LookupMiss : public Error {
 public:
  using Error::Error;
};

/// Configuration rejected before any work is done. `field` is a dotted path.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// External process misbehaved: malformed frame, crash or timeout.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class WorkerCrashed : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

class TimeoutError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

}  // namespace snas
