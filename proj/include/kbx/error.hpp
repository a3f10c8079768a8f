// Copyright 2026 The kbx Authors.
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
#include <utility>

namespace kbx {

// Base error. Every error carries the name of the module that raised it so
// the pipeline can report where a run aborted.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& message)
      : std::runtime_error(module + ": " + message),
        module_(std::move(module)),
        detail_(message) {}

  const std::string& module() const { return module_; }
  // Message without the module prefix.
  const std::string& detail() const { return detail_; }

 private:
  std::string module_;
  std::string detail_;
};

// Input file defect at a specific line (1-based).
class ParseError : public Error {
 public:
  ParseError(std::string module, std::string path, std::size_t line,
             const std::string& message)
      : Error(std::move(module),
              path + ":" + std::to_string(line) + ": " + message),
        path_(std::move(path)),
        line_(line) {}

  const std::string& path() const { return path_; }
  std::size_t line() const { return line_; }

 private:
  std::string path_;
  std::size_t line_;
};

// Configuration or precondition violation detected before any work is done.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace kbx
