#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace strainsurf {

enum class ErrorCode {
  InvalidArgument,
  PointOutsideDomain,
  SyntaxError,
  UnknownIdentifier,
  EvalDomainError,
  NoConeExists,
  NoAdmissibleDirection,
  CurveTooShort,
  ZeroLengthCurve,
  ZeroVelocityOnCurve,
  MissingNormal,
  DegenerateMesh,
  LeftDomain,
  EmptySurface,
  SingularNormalEquations,
  InsufficientValidPoints,
  NoCandidatesFound,
  Io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Parse failure; `offset` is the byte position in the source text.
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, const std::string& what, std::size_t offset)
      : Error(code, what + " at offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace strainsurf
