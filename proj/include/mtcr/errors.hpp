// Copyright 2026 The mtcr-vc Authors
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
#include <vector>

namespace mtcr {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Collects every violated constraint, not just the first.
struct ConfigError : Error {
  std::vector<std::string> violations;
  explicit ConfigError(std::vector<std::string> v)
      : Error(join(v)), violations(std::move(v)) {}
  explicit ConfigError(const std::string& msg)
      : Error(msg), violations{msg} {}

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s = "invalid config:";
    for (const auto& x : v) s += "\n  - " + x;
    return s;
  }
};

struct DimensionMismatch : Error { using Error::Error; };
struct DivisibilityError : Error { using Error::Error; };
struct EmptySequence : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct ConfigMismatch : Error { using Error::Error; };
struct NonFiniteLoss : Error { using Error::Error; };
struct CorpusTooSmall : Error { using Error::Error; };
struct ToleranceExceeded : Error { using Error::Error; };
struct CorruptContainer : Error { using Error::Error; };
struct DuplicateName : Error { using Error::Error; };
struct BadRange : Error { using Error::Error; };
struct DegenerateInput : Error { using Error::Error; };
struct OneClassOnly : Error { using Error::Error; };
struct EmptySet : Error { using Error::Error; };

}  // namespace mtcr
