#include "occkit/error.hpp"

namespace occkit {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::UnknownTaxonomy: return "UnknownTaxonomy";
    case ErrorCode::SingularPose: return "SingularPose";
    case ErrorCode::SpecMismatch: return "SpecMismatch";
    case ErrorCode::UnknownObjectId: return "UnknownObjectId";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyAfterFiltering: return "EmptyAfterFiltering";
    case ErrorCode::NoEvaluableClass: return "NoEvaluableClass";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::TruncatedChunk: return "TruncatedChunk";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace occkit
