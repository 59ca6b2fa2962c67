#include "polsar/error.hpp"

namespace polsar {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::EmptyImage: return "EmptyImage";
    case ErrorCode::MissingClassModel: return "MissingClassModel";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::TooFewClasses: return "TooFewClasses";
    case ErrorCode::BandMismatch: return "BandMismatch";
    case ErrorCode::ClassTooSmall: return "ClassTooSmall";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::MalformedModel: return "MalformedModel";
    case ErrorCode::PaletteTooSmall: return "PaletteTooSmall";
  }
  return "Unknown";
}

}  // namespace polsar
