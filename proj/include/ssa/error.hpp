#pragma once

#include <stdexcept>
#include <string>

namespace ssa {

// Every failure the library can raise, grouped by how the CLI reports it:
// usage -> exit 1, data -> exit 2, numeric -> exit 3.
enum class ErrorCode {
  // numeric
  DimensionTooLarge,
  DegenerateInput,
  DimensionMismatch,
  FrameMismatch,
  SingleClass,
  NonFiniteInput,
  // data
  UnknownSeedId,
  TooFewSamples,
  EmptyInput,
  MissingSeedClass,
  TooFewSteps,
  EmptyClass,
  LengthMismatch,
  MalformedHeader,
  MalformedRecord,
  RaggedRow,
  UnknownStep,
  UnknownLabel,
  DuplicateId,
  EmptyStep,
  MissingClass,
  NoHistory,
  // usage
  InvalidConfig,
};

enum class ErrorCategory { usage, data, numeric };

constexpr ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionTooLarge:
    case ErrorCode::DegenerateInput:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::FrameMismatch:
    case ErrorCode::SingleClass:
    case ErrorCode::NonFiniteInput:
      return ErrorCategory::numeric;
    case ErrorCode::InvalidConfig:
      return ErrorCategory::usage;
    default:
      return ErrorCategory::data;
  }
}

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }
  ErrorCategory category() const { return category_of(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace ssa
