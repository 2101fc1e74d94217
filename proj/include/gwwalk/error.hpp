#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gwwalk {

enum class ErrorCode {
  NotNormalized,
  Subcritical,
  AssumptionViolation,
  StepBudgetExceeded,
  Range,
  Undefined,
  InvalidArgument,
  Io,
};

constexpr std::string_view to_string(ErrorCode c) noexcept {
  switch (c) {
    case ErrorCode::NotNormalized: return "NOT_NORMALIZED";
    case ErrorCode::Subcritical: return "SUBCRITICAL";
    case ErrorCode::AssumptionViolation: return "ASSUMPTION_VIOLATION";
    case ErrorCode::StepBudgetExceeded: return "STEP_BUDGET_EXCEEDED";
    case ErrorCode::Range: return "RANGE";
    case ErrorCode::Undefined: return "UNDEFINED";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::Io: return "IO";
  }
  return "UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gwwalk
