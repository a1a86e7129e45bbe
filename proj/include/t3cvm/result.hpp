// Copyright 2026 The T3CVM Simulator Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef T3CVM_RESULT_HPP_
#define T3CVM_RESULT_HPP_

#include <cassert>
#include <string>
#include <utility>
#include <variant>

namespace t3cvm {

enum class Err : std::uint8_t {
  kMalformed,
  kAuthFailure,
  kCertChainInvalid,
  kPcrIndexOutOfRange,
  kEmptySelection,
  kBindingViolation,
  kRollbackDetected,
  kMalformedState,
  kPlatformUntrusted,
  kInitMeasurementMismatch,
  kBootMeasurementMismatch,
  kLaunchAborted,
  kChannelAuthFailure,
  kSequenceViolation,
  kRefused,
  kNotFound,
  kAlreadyExists,
  kTimeout,
  kUnavailable,
};

const char* err_name(Err code);

struct Error {
  Err code;
  std::string detail;
  // Protocol step or chain link index the failure is attributed to, when
  // that is meaningful; 0 otherwise.
  int step = 0;

  std::string to_string() const;
};

template <typename T>
class [[nodiscard]] Result {
 public:
  Result(T value) : v_(std::move(value)) {}  // NOLINT: implicit by design
  Result(Error error) : v_(std::move(error)) {}
  Result(Err code, std::string detail = "", int step = 0)
      : v_(Error{code, std::move(detail), step}) {}

  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }

  const T& value() const& {
    assert(ok());
    return std::get<T>(v_);
  }
  T& value() & {
    assert(ok());
    return std::get<T>(v_);
  }
  T&& take() {
    assert(ok());
    return std::move(std::get<T>(v_));
  }

  const Error& error() const {
    assert(!ok());
    return std::get<Error>(v_);
  }

 private:
  std::variant<T, Error> v_;
};

template <>
class [[nodiscard]] Result<void> {
 public:
  Result() = default;
  Result(Error error) : err_(std::move(error)) {}  // NOLINT
  Result(Err code, std::string detail = "", int step = 0)
      : err_(Error{code, std::move(detail), step}) {}

  static Result ok_result() { return Result(); }

  bool ok() const { return !err_.has_value(); }
  explicit operator bool() const { return ok(); }

  const Error& error() const {
    assert(!ok());
    return *err_;
  }

 private:
  std::optional<Error> err_;
};

}  // namespace t3cvm

#endif  // T3CVM_RESULT_HPP_
