/*
 * Copyright 2026 The AQA Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aqa {

// Base of every error raised by the library. Validation errors map to CLI
// exit code 1, everything else to 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller supplied something that violates a documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed JSON line in a corpus file.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Sample-level content inconsistency (bad answer offsets, unlabelable span).
class ValidationError : public Error {
 public:
  ValidationError(std::string sample_id, const std::string& what)
      : Error("sample '" + sample_id + "': " + what),
        sample_id_(std::move(sample_id)) {}
  const std::string& sample_id() const { return sample_id_; }

 private:
  std::string sample_id_;
};

// Binary or text resource file with a broken layout. `offset` is a byte
// offset for binary formats and a line number for text formats.
class FormatError : public Error {
 public:
  FormatError(std::size_t offset, const std::string& what)
      : Error("offset " + std::to_string(offset) + ": " + what),
        offset_(offset) {}
  explicit FormatError(const std::string& what) : Error(what), offset_(0) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace aqa
