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

#include "qrelay/error.hpp"

namespace qrelay {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedInput: return "malformed-input";
    case ErrorCode::DegenerateInput: return "degenerate-input";
    case ErrorCode::Capability: return "capability";
    case ErrorCode::KeyExhaustion: return "key-exhaustion";
    case ErrorCode::NoKey: return "no-key";
    case ErrorCode::Conflict: return "conflict";
    case ErrorCode::NotFound: return "not-found";
    case ErrorCode::Refused: return "refused";
    case ErrorCode::RouteLost: return "route-lost";
    case ErrorCode::TamperAlarm: return "tamper-alarm";
    case ErrorCode::Validation: return "validation";
    case ErrorCode::Syntax: return "syntax";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

namespace {
std::string join_violations(const std::vector<Violation>& violations) {
  std::string s = "configuration invalid:";
  for (const auto& v : violations) {
    s += "\n  " + v.location + ": " + v.message;
  }
  return s;
}
}  // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error(ErrorCode::Validation, join_violations(violations)),
      violations_(std::move(violations)) {}

void fail(ErrorCode code, const std::string& what) {
  throw Error(code, std::string(to_string(code)) + ": " + what);
}

}  // namespace qrelay
