// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <stdexcept>
#include <string>

namespace regionflow {

enum class ErrorCode {
  invalid_input,
  empty_dataset,
  numerical_failure,
  not_found,
  conflict,
  io_error,
  internal,
};

/// Stable snake_case name, used in JSON error bodies and CLI messages.
const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the solver when an update produces NaN or Inf.
class NumericalFailure : public Error {
 public:
  NumericalFailure(int frame, int iteration, const std::string& what);

  int frame() const noexcept { return frame_; }
  int iteration() const noexcept { return iteration_; }

 private:
  int frame_;
  int iteration_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace regionflow
