#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rowsim {

enum class ErrorCode {
  EnvelopeOutOfRange,
  BurstExceedsHorizon,
  InvalidArgument,
  IntegratorFault,
  NumericBlowup,
  LogTooShort,
  NonuniformSampling,
  MissingChannel,
  NoSteadyWindow,
  InsufficientDuration,
  Unidentifiable,
  UnknownLocation,
  Miscoordination,
  ProfileLengthMismatch,
  Unrestorable,
  Infeasible,
  ParseError,
  ValidationError,
  EmptyLog,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-checkable code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rowsim
