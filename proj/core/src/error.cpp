#include "rowsim/error.hpp"

namespace rowsim {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EnvelopeOutOfRange: return "envelope-out-of-range";
    case ErrorCode::BurstExceedsHorizon: return "burst-exceeds-horizon";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::IntegratorFault: return "integrator-fault";
    case ErrorCode::NumericBlowup: return "numeric-blowup";
    case ErrorCode::LogTooShort: return "log-too-short";
    case ErrorCode::NonuniformSampling: return "nonuniform-sampling";
    case ErrorCode::MissingChannel: return "missing-channel";
    case ErrorCode::NoSteadyWindow: return "no-steady-window";
    case ErrorCode::InsufficientDuration: return "insufficient-duration";
    case ErrorCode::Unidentifiable: return "unidentifiable";
    case ErrorCode::UnknownLocation: return "unknown-location";
    case ErrorCode::Miscoordination: return "miscoordination";
    case ErrorCode::ProfileLengthMismatch: return "profile-length-mismatch";
    case ErrorCode::Unrestorable: return "unrestorable";
    case ErrorCode::Infeasible: return "infeasible";
    case ErrorCode::ParseError: return "parse-error";
    case ErrorCode::ValidationError: return "validation-error";
    case ErrorCode::EmptyLog: return "empty-log";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

}  // namespace rowsim
