#include "ssa/error.hpp"

namespace ssa {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::FrameMismatch: return "FrameMismatch";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::UnknownSeedId: return "UnknownSeedId";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::MissingSeedClass: return "MissingSeedClass";
    case ErrorCode::TooFewSteps: return "TooFewSteps";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::RaggedRow: return "RaggedRow";
    case ErrorCode::UnknownStep: return "UnknownStep";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::EmptyStep: return "EmptyStep";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::NoHistory: return "NoHistory";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Error";
}

}  // namespace ssa
