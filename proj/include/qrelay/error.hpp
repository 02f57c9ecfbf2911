/*
 *    Copyright 2026 The qrelay Authors.
 *
 *    Licensed under the Apache License, Version 2.0 (the "License");
 *    you may not use this file except in compliance with the License.
 *    You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 *    Unless required by applicable law or agreed to in writing, software
 *    distributed under the License is distributed on an "AS IS" BASIS,
 *    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *    See the License for the specific language governing permissions and
 *    limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qrelay {

enum class ErrorCode {
  MalformedInput,
  DegenerateInput,
  Capability,
  KeyExhaustion,
  NoKey,
  Conflict,
  NotFound,
  Refused,
  RouteLost,
  TamperAlarm,
  Validation,
  Syntax,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library. The code is the
/// stable classification; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct Violation {
  std::string location;
  std::string message;

  bool operator==(const Violation&) const = default;
};

/// Raised when a configuration fails validation. Carries every violation
/// found, not only the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations);

  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<Violation> violations_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace qrelay
