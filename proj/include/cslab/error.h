// Copyright 2026 The cs-lab Authors.
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

#ifndef CSLAB_ERROR_H_
#define CSLAB_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cslab {

// Base class for every error raised by the library. The category is a short
// machine-parsable word used by the command line front end.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* category() const noexcept = 0;
};

// Malformed or unusable input data (bad files, zero-probability tokens, ...).
class DataError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "data"; }
};

// Parse failure with the 1-based line number it happened on.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A caller broke an operation's precondition (shapes, ranges, state).
class ContractError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "contract"; }
};

}  // namespace cslab

#endif  // CSLAB_ERROR_H_
