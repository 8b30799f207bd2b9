// Licensed under the Apache License 2.0 (see LICENSE file).

#include "regionflow/error.hpp"

namespace regionflow {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_input: return "invalid_input";
    case ErrorCode::empty_dataset: return "empty_dataset";
    case ErrorCode::numerical_failure: return "numerical_failure";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::internal: return "internal";
  }
  return "internal";
}

NumericalFailure::NumericalFailure(int frame, int iteration, const std::string& what)
    : Error(ErrorCode::numerical_failure,
            "non-finite value in " + what + " at frame " + std::to_string(frame) +
                ", iteration " + std::to_string(iteration)),
      frame_(frame),
      iteration_(iteration) {}

}  // namespace regionflow
