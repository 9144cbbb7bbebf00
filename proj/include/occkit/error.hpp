#pragma once

#include <stdexcept>
#include <string>

namespace occkit {

enum class ErrorCode {
  UnknownLabel,
  UnknownTaxonomy,
  SingularPose,
  SpecMismatch,
  UnknownObjectId,
  EmptyInput,
  EmptyAfterFiltering,
  NoEvaluableClass,
  InsufficientData,
  BadMagic,
  UnsupportedVersion,
  TruncatedChunk,
  InvariantViolation,
  ParseError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace occkit
