// Copyright 2026 The Authors.
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

#ifndef CONSEL_ERROR_H_
#define CONSEL_ERROR_H_

#include <stdexcept>
#include <string>

namespace consel {

// Error categories. The numeric values double as CLI exit codes.
enum class ErrorKind {
  kUsage = 1,
  kMissingInput = 2,
  kInvalidData = 3,
  kNumeric = 4,
};

const char* ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message,
        std::string path = "")
      : std::runtime_error(message),
        kind_(kind),
        code_(std::move(code)),
        path_(std::move(path)) {}

  ErrorKind kind() const { return kind_; }
  // Short machine-readable tag, e.g. "duplicate-id" or "bad-magic".
  const std::string& code() const { return code_; }
  // File the error refers to, if any.
  const std::string& path() const { return path_; }

 private:
  ErrorKind kind_;
  std::string code_;
  std::string path_;
};

[[noreturn]] inline void ThrowInvalid(std::string code,
                                      const std::string& message,
                                      std::string path = "") {
  throw Error(ErrorKind::kInvalidData, std::move(code), message,
              std::move(path));
}

}  // namespace consel

#endif  // CONSEL_ERROR_H_
