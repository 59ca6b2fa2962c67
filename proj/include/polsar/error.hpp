#pragma once

#include <stdexcept>
#include <string>

namespace polsar {

enum class ErrorCode {
  MalformedHeader,
  DimensionMismatch,
  NonFiniteValue,
  IoFailure,
  EmptyImage,
  MissingClassModel,
  InvalidArgument,
  ConvergenceFailure,
  TooFewSamples,
  ShapeMismatch,
  DivergenceDetected,
  KTooLarge,
  TooFewClasses,
  BandMismatch,
  ClassTooSmall,
  VersionMismatch,
  MalformedModel,
  PaletteTooSmall,
};

const char* to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-readable error kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// Description without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace polsar
