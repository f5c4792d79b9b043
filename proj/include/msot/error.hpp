// Copyright 2026 The msot Authors.
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

#ifndef MSOT_ERROR_HPP_
#define MSOT_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace msot {

enum class ErrorCode {
  kInvalidArgument = 1,
  kInfeasible = 2,
  kNumerical = 3,
  kIo = 4,
  kSizeLimit = 5,
  kInternal = 6,
};

// Single exception type thrown by the library; the C API maps the code onto
// its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void Require(bool condition, const std::string& what) {
  if (!condition) Fail(ErrorCode::kInvalidArgument, what);
}

// Literal messages: no string is built unless the check fails.
inline void Require(bool condition, const char* what) {
  if (!condition) Fail(ErrorCode::kInvalidArgument, what);
}

}  // namespace msot

#endif  // MSOT_ERROR_HPP_
