// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rwlsh {

/// Machine-readable failure class. The CLI maps each category to a distinct
/// exit code and prints it in its JSON error envelope.
enum class ErrorCategory {
  kInvalidArgument,
  kDimensionMismatch,
  kOutOfRange,
  kIo,
  kFormat,
  kCorruption,
  kVersionMismatch,
  kResourceExhausted,
};

std::string_view category_name(ErrorCategory category) noexcept;
int exit_code(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& message) {
  throw Error(category, message);
}

inline void require(bool condition, ErrorCategory category, const std::string& message) {
  if (!condition) {
    fail(category, message);
  }
}

}  // namespace rwlsh
