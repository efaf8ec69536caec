// Copyright 2026 The mmgd Authors. All Rights Reserved.
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

#ifndef MMGD_ERROR_H_
#define MMGD_ERROR_H_

#include <stdexcept>
#include <string>

namespace mmgd {

// Base of every error thrown by the library. The category drives the CLI
// exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or contract violation by the caller.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Tensor shapes or dimensions that do not fit the operation.
class ShapeError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Malformed or inconsistent input data (files, annotations, references).
class DataError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf produced or consumed where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A record in an input file could not be parsed or violates the schema.
class ParseError : public DataError {
 public:
  ParseError(const std::string& message, long line, long byte_offset)
      : DataError(message + " (line " + std::to_string(line) + ", byte " +
                  std::to_string(byte_offset) + ")"),
        line_(line),
        byte_offset_(byte_offset) {}

  long line() const { return line_; }
  long byte_offset() const { return byte_offset_; }

 private:
  long line_;
  long byte_offset_;
};

// Annotation references something that does not exist (phrase, category,
// partition tag).
class AnnotationError : public DataError {
 public:
  using DataError::DataError;
};

// Synthetic data cannot satisfy its layout constraints.
class GenerationError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace mmgd

#endif  // MMGD_ERROR_H_
