#include "threec/error.hpp"

namespace threec {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::DimsOverflow: return "DimsOverflow";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigInfeasible: return "ConfigInfeasible";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::CapacityExceeded: return "CapacityExceeded";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MissingDigit: return "MissingDigit";
    case ErrorCode::MissingGroundTruth: return "MissingGroundTruth";
    case ErrorCode::EmptyTable: return "EmptyTable";
    case ErrorCode::RhoZero: return "RhoZero";
  }
  return "Unknown";
}

}  // namespace threec
